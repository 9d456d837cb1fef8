// Range-query demo for the block SVD store: builds a store over synthetic
// log returns, answers random range queries and compares each answer with a
// direct SVD of the same rows.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <random>

#include "lfss/market_data.hpp"
#include "lfss/zoomsvd.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Block SVD store range-query demo"};
    long rows = 500, cols = 15, block = 60, queries = 200;
    std::uint64_t seed = 7;
    app.add_option("--rows", rows, "Rows of the synthetic return matrix")->check(CLI::Range(2L, 1000000L));
    app.add_option("--cols", cols, "Assets")->check(CLI::Range(1L, 1000L));
    app.add_option("--block", block, "Rows per stored block")->check(CLI::Range(1L, 1000000L));
    app.add_option("--queries", queries, "Random range queries")->check(CLI::Range(1L, 1000000L));
    app.add_option("--seed", seed, "Random seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto n = static_cast<std::size_t>(cols);
        const lfss::OhlcSeries s = lfss::synth_gbm(seed, n, static_cast<std::size_t>(rows) + 1,
                                                   std::vector<double>(n, 0.05), std::vector<double>(n, 0.3));
        const Eigen::MatrixXd r = lfss::log_returns(s.close).bottomRows(rows);

        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        const lfss::BlockStore store = lfss::store_phase(r, block);
        const auto t1 = clock::now();

        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<long> pick(0, rows - 1);
        double worst_sv = 0.0, query_seconds = 0.0, direct_seconds = 0.0;
        for (long q = 0; q < queries; ++q) {
            long a = pick(rng), b = pick(rng);
            if (a > b) std::swap(a, b);
            const auto q0 = clock::now();
            const lfss::SvdTriple fast = store.query(a, b);
            const auto q1 = clock::now();
            const Eigen::JacobiSVD<Eigen::MatrixXd> direct(r.middleRows(a, b - a + 1));
            const auto q2 = clock::now();
            query_seconds += std::chrono::duration<double>(q1 - q0).count();
            direct_seconds += std::chrono::duration<double>(q2 - q1).count();
            const Eigen::VectorXd& ref = direct.singularValues();
            for (Eigen::Index i = 0; i < fast.rank(); ++i)
                worst_sv = std::max(worst_sv, std::abs(fast.S(i) - ref(i)) / ref(0));
        }

        std::printf("matrix            %ld x %ld, block %ld\n", rows, cols, block);
        std::printf("store build       %.4f s, %ld numbers held (raw %ld)\n",
                    std::chrono::duration<double>(t1 - t0).count(), static_cast<long>(store.stored_numbers()),
                    rows * cols);
        std::printf("queries           %ld\n", queries);
        std::printf("store queries     %.4f s\n", query_seconds);
        std::printf("direct SVDs       %.4f s\n", direct_seconds);
        std::printf("max sv error      %.3e (relative to the largest)\n", worst_sv);
        return 0;
    } catch (const lfss::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
