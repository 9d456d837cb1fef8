#pragma once

// Versioned JSON containers for trained artifacts, plus the hashing used to
// tie artifacts to the configuration that produced them.
//
// Every artifact file is an object
//   {"format": "lfss-container", "version": 1, "kind": ..., "config_hash": ..., ...}
// so a stage can reject a file written by a different stage or an
// incompatible build before it touches the payload.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "lfss/error.hpp"
#include "lfss/nn.hpp"

namespace lfss {

using json = nlohmann::json;

inline constexpr int kContainerVersion = 1;

inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
    if (!a.is_array()) throw ValidationError("expected a JSON array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ValidationError("expected a JSON array of numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

/// Row-major nested arrays.
inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index cols_if_empty = 0) {
    if (!rows.is_array()) throw ValidationError("expected a JSON matrix");
    if (rows.empty()) return Eigen::MatrixXd(0, cols_if_empty);
    const auto cols = static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd v = vector_from_json(rows[r]);
        if (v.size() != cols) throw ValidationError("ragged JSON matrix");
        m.row(static_cast<Eigen::Index>(r)) = v.transpose();
    }
    return m;
}

inline json network_to_json(const nn::Sequential& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        if (const auto* d = std::get_if<nn::Dense>(&l))
            layers.push_back({{"type", "dense"}, {"in", d->in}, {"out", d->out}});
        else if (const auto* c = std::get_if<nn::Conv1d>(&l))
            layers.push_back({{"type", "conv1d"},
                              {"in_channels", c->in_channels},
                              {"out_channels", c->out_channels},
                              {"kernel", c->kernel},
                              {"length", c->length}});
        else if (const auto* p = std::get_if<nn::AvgPool1d>(&l))
            layers.push_back({{"type", "avgpool1d"},
                              {"channels", p->channels},
                              {"length", p->length},
                              {"factor", p->factor}});
        else if (const auto* u = std::get_if<nn::Upsample1d>(&l))
            layers.push_back({{"type", "upsample1d"},
                              {"channels", u->channels},
                              {"length", u->length},
                              {"factor", u->factor}});
        else {
            const auto& a = std::get<nn::Act>(l);
            layers.push_back({{"type", "activation"}, {"kind", nn::to_string(a.kind)}, {"size", a.size}});
        }
    }
    return {{"layers", layers}, {"params", vector_to_json(net.params())}};
}

inline nn::Sequential network_from_json(const json& j) {
    try {
        std::vector<nn::LayerSpec> specs;
        for (const auto& l : j.at("layers")) {
            const std::string type = l.at("type").get<std::string>();
            if (type == "dense")
                specs.emplace_back(nn::Dense{l.at("in").get<int>(), l.at("out").get<int>()});
            else if (type == "conv1d")
                specs.emplace_back(nn::Conv1d{l.at("in_channels").get<int>(),
                                              l.at("out_channels").get<int>(),
                                              l.at("kernel").get<int>(), l.at("length").get<int>()});
            else if (type == "avgpool1d")
                specs.emplace_back(nn::AvgPool1d{l.at("channels").get<int>(),
                                                 l.at("length").get<int>(), l.at("factor").get<int>()});
            else if (type == "upsample1d")
                specs.emplace_back(nn::Upsample1d{l.at("channels").get<int>(),
                                                  l.at("length").get<int>(), l.at("factor").get<int>()});
            else if (type == "activation")
                specs.emplace_back(nn::Act{nn::activation_from_string(l.at("kind").get<std::string>()),
                                           l.at("size").get<int>()});
            else
                throw ValidationError("unknown layer type '" + type + "'");
        }
        nn::Sequential net(std::move(specs));
        const Eigen::VectorXd p = vector_from_json(j.at("params"));
        if (!p.allFinite()) throw ValidationError("network parameters are not finite");
        net.set_params(p);
        return net;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed network: ") + e.what());
    }
}

inline json make_container(const std::string& kind, const std::string& config_hash) {
    return {{"format", "lfss-container"},
            {"version", kContainerVersion},
            {"kind", kind},
            {"config_hash", config_hash}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Reads a container and checks its header against the expected kind.
inline json read_container(const std::filesystem::path& path, const std::string& kind) {
    json j = read_json_file(path);
    if (!j.is_object() || j.value("format", "") != "lfss-container")
        throw ValidationError(path.string() + ": not an lfss container");
    if (j.value("version", 0) != kContainerVersion)
        throw ValidationError(path.string() + ": unsupported container version");
    if (j.value("kind", "") != kind)
        throw ValidationError(path.string() + ": expected kind '" + kind + "', found '" +
                              j.value("kind", "") + "'");
    return j;
}

}  // namespace lfss
