#pragma once

// Linear-Gaussian filtering.
//
//   x_{t+1} = F x_t + w_t,   w_t ~ N(0, Q)
//   y_t     = G x_t + v_t,   v_t ~ N(0, R)
//
// One step of the recursion predicts from the previous posterior, forms the
// innovation against the new measurement and updates:
//
//   P_pred = F P F' + Q
//   eps    = y - G F x
//   K      = P_pred G' (G P_pred G' + R)^-1
//   x'     = F x + K eps
//   P'     = (I - K G) P_pred            (symmetrised)

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lfss/error.hpp"

namespace lfss {

struct KalmanModel {
    Eigen::MatrixXd F;   // state transition
    Eigen::MatrixXd G;   // measurement
    Eigen::MatrixXd Q;   // state noise covariance
    Eigen::MatrixXd R;   // measurement noise covariance
    Eigen::VectorXd mu0;
    Eigen::MatrixXd P0;

    Eigen::Index state_dim() const { return F.rows(); }
    Eigen::Index measurement_dim() const { return G.rows(); }

    /// Scalar local-level model (F = G = 1).
    static KalmanModel local_level(double q, double r, double mu0, double p0) {
        KalmanModel m;
        m.F = Eigen::MatrixXd::Ones(1, 1);
        m.G = Eigen::MatrixXd::Ones(1, 1);
        m.Q = Eigen::MatrixXd::Constant(1, 1, q);
        m.R = Eigen::MatrixXd::Constant(1, 1, r);
        m.mu0 = Eigen::VectorXd::Constant(1, mu0);
        m.P0 = Eigen::MatrixXd::Constant(1, 1, p0);
        return m;
    }
};

namespace detail {

inline bool symmetric_psd(const Eigen::MatrixXd& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff()))
        return false;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                           Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace detail

inline void validate(const KalmanModel& m) {
    const auto n = m.state_dim();
    const auto p = m.measurement_dim();
    if (m.F.cols() != n || m.G.cols() != n || m.Q.rows() != n || m.P0.rows() != n ||
        m.mu0.size() != n || m.R.rows() != p)
        throw ValidationError("Kalman model dimensions are inconsistent");
    if (!detail::symmetric_psd(m.Q)) throw ValidationError("Q must be symmetric PSD");
    if (!detail::symmetric_psd(m.R)) throw ValidationError("R must be symmetric PSD");
    if (!detail::symmetric_psd(m.P0)) throw ValidationError("P0 must be symmetric PSD");
}

struct KalmanStep {
    Eigen::VectorXd mean;        // x_{t|t}
    Eigen::MatrixXd cov;         // P_{t|t}
    Eigen::VectorXd innovation;  // eps_t
    Eigen::MatrixXd gain;        // K_t
};

inline KalmanStep kalman_step(const KalmanModel& m, const Eigen::VectorXd& prior_mean,
                              const Eigen::MatrixXd& prior_cov,
                              const Eigen::VectorXd& measurement) {
    if (measurement.size() != m.measurement_dim() || prior_mean.size() != m.state_dim())
        throw ValidationError("kalman_step: dimension mismatch");
    const Eigen::VectorXd x_pred = m.F * prior_mean;
    Eigen::MatrixXd p_pred = m.F * prior_cov * m.F.transpose() + m.Q;
    p_pred = 0.5 * (p_pred + p_pred.transpose());

    KalmanStep out;
    out.innovation = measurement - m.G * x_pred;
    const Eigen::MatrixXd s = m.G * p_pred * m.G.transpose() + m.R;
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success || !s.allFinite())
        throw NumericalError("innovation covariance G P G' + R is singular");
    // K = P G' S^-1, computed as (S^-1 G P)' since P and S are symmetric.
    out.gain = llt.solve(m.G * p_pred).transpose();
    out.mean = x_pred + out.gain * out.innovation;
    const auto n = m.state_dim();
    out.cov = (Eigen::MatrixXd::Identity(n, n) - out.gain * m.G) * p_pred;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

struct FilterResult {
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::MatrixXd> covariances;
    std::vector<Eigen::VectorXd> innovations;
    std::vector<Eigen::MatrixXd> gains;
};

inline FilterResult filter_series(const KalmanModel& m,
                                  const std::vector<Eigen::VectorXd>& measurements) {
    if (measurements.empty()) throw ValidationError("filter_series: no measurements");
    validate(m);
    FilterResult r;
    r.states.reserve(measurements.size());
    r.covariances.reserve(measurements.size());
    r.innovations.reserve(measurements.size());
    r.gains.reserve(measurements.size());
    Eigen::VectorXd mean = m.mu0;
    Eigen::MatrixXd cov = m.P0;
    for (const auto& y : measurements) {
        auto step = kalman_step(m, mean, cov, y);
        mean = step.mean;
        cov = step.cov;
        r.states.push_back(std::move(step.mean));
        r.covariances.push_back(std::move(step.cov));
        r.innovations.push_back(std::move(step.innovation));
        r.gains.push_back(std::move(step.gain));
    }
    return r;
}

/// Scalar convenience over filter_series: posterior means of a local-level model.
inline std::vector<double> filter_scalar(const KalmanModel& m, std::span<const double> ys) {
    std::vector<Eigen::VectorXd> meas;
    meas.reserve(ys.size());
    for (double y : ys) meas.push_back(Eigen::VectorXd::Constant(1, y));
    const auto r = filter_series(m, meas);
    std::vector<double> out;
    out.reserve(r.states.size());
    for (const auto& s : r.states) out.push_back(s(0));
    return out;
}

struct NoiseParams {
    double q;
    double r;
};

inline constexpr double kNoiseFloor = 1e-12;

/// Moment heuristic for a local-level model: R is half the variance of first
/// differences, Q = kappa * R. A constant series is clamped to (1e-12, 1e-12).
inline NoiseParams fit_noise_params(std::span<const double> ys, double kappa = 0.1) {
    if (ys.size() < 10) throw ValidationError("fit_noise_params needs at least 10 measurements");
    if (!(kappa >= 0.0)) throw ValidationError("kappa must be non-negative");
    const std::size_t n = ys.size() - 1;
    double mean = 0.0;
    for (std::size_t t = 1; t < ys.size(); ++t) mean += ys[t] - ys[t - 1];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = 1; t < ys.size(); ++t) {
        const double d = ys[t] - ys[t - 1] - mean;
        ss += d * d;
    }
    const double r = ss / static_cast<double>(n - 1) / 2.0;
    if (!(r > kNoiseFloor)) return {kNoiseFloor, kNoiseFloor};
    return {kappa * r, r};
}

/// Per-series local-level filter settings as used by the filtering unit.
struct LocalLevelParams {
    double q = kNoiseFloor;
    double r = kNoiseFloor;
    double mu0 = 0.0;
    double p0 = kNoiseFloor;

    KalmanModel model() const { return KalmanModel::local_level(q, r, mu0, p0); }
};

/// Fits on the training prefix only; the prior starts at zero return with
/// variance R.
inline LocalLevelParams fit_local_level(std::span<const double> train, double kappa) {
    const auto np = fit_noise_params(train, kappa);
    return {np.q, np.r, 0.0, np.r};
}

/// Filters every column of a log-return panel (row 0 is the undefined first
/// return and is passed through). Column j uses params[j].
inline Eigen::MatrixXd filter_panel(const Eigen::MatrixXd& returns,
                                    const std::vector<LocalLevelParams>& params) {
    if (static_cast<Eigen::Index>(params.size()) != returns.cols())
        throw ValidationError("filter_panel: one parameter set per column required");
    Eigen::MatrixXd out = returns;
    if (returns.rows() < 2) return out;
    std::vector<double> col(static_cast<std::size_t>(returns.rows() - 1));
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
        for (Eigen::Index t = 1; t < returns.rows(); ++t)
            col[static_cast<std::size_t>(t - 1)] = returns(t, j);
        const auto f = filter_scalar(params[static_cast<std::size_t>(j)].model(), col);
        for (Eigen::Index t = 1; t < returns.rows(); ++t)
            out(t, j) = f[static_cast<std::size_t>(t - 1)];
    }
    return out;
}

/// Prices implied by cumulating log returns from the first observed price.
inline Eigen::MatrixXd cumulate_prices(const Eigen::RowVectorXd& first_price,
                                       const Eigen::MatrixXd& log_returns) {
    Eigen::MatrixXd p(log_returns.rows(), log_returns.cols());
    if (p.rows() == 0) return p;
    p.row(0) = first_price;
    for (Eigen::Index t = 1; t < p.rows(); ++t)
        p.row(t) = (p.row(t - 1).array() * log_returns.row(t).array().exp()).matrix();
    return p;
}

}  // namespace lfss
