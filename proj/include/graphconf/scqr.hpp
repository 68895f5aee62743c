#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "graphconf/conformal.hpp"
#include "graphconf/errors.hpp"
#include "graphconf/rng.hpp"

namespace graphconf {

// Pinball (quantile) loss at level tau.
inline double pinball_loss(double y, double y_hat, double tau) {
    require(std::isfinite(tau) && tau > 0.0 && tau < 1.0, errc::tau_out_of_range,
            "tau must lie in (0, 1)");
    require(std::isfinite(y) && std::isfinite(y_hat), errc::non_finite,
            "pinball loss needs finite arguments");
    const double diff = y - y_hat;
    return diff >= 0.0 ? tau * diff : (tau - 1.0) * diff;
}

// Subgradient of the pinball loss with respect to the prediction. At the kink
// (y == y_hat) zero is returned — the choice that leaves an exact fit alone.
inline double pinball_grad(double y, double y_hat, double tau) {
    require(std::isfinite(tau) && tau > 0.0 && tau < 1.0, errc::tau_out_of_range,
            "tau must lie in (0, 1)");
    require(std::isfinite(y) && std::isfinite(y_hat), errc::non_finite,
            "pinball gradient needs finite arguments");
    if (y_hat > y) return 1.0 - tau;
    if (y_hat < y) return -tau;
    return 0.0;
}

enum class RegressorKind { linear, one_hidden_layer };

struct TrainConfig {
    // Linear: full-batch subgradient descent starting at zero weights.
    double lr = 0.01;   // initial step size
    int epochs = 2000;
    // One-hidden-layer: Adam on minibatches in fixed data order, stopping
    // early once the epoch loss stops improving.
    double adam_lr = 0.001;
    int batch_size = 32;
    int patience = 3;
    double min_improvement = 1e-4;
    int hidden_width = 32;
    std::uint64_t seed = 0;
};

// A fitted quantile regressor psi. Weights are stored in the original input
// scale (any internal standardization is folded back after training).
struct QuantileRegressor {
    RegressorKind kind = RegressorKind::linear;
    int input_dim = 0;
    double tau = 0.5;
    // linear: psi(x) = w . x + b
    Vector w;
    double b = 0.0;
    // one_hidden_layer: psi(x) = w2 . relu(W1 x + b1) + b2
    Matrix w1;
    Vector b1;
    Vector w2;
    double b2 = 0.0;

    double predict(const Vector& x) const {
        require(x.size() == input_dim, errc::dim_mismatch,
                "feature length " + std::to_string(x.size()) + " does not match model input dim " +
                    std::to_string(input_dim));
        require(x.allFinite(), errc::non_finite, "feature vector must be finite");
        if (kind == RegressorKind::linear) return w.dot(x) + b;
        Vector h = (w1 * x + b1).cwiseMax(0.0);
        return w2.dot(h) + b2;
    }

    static QuantileRegressor zero(int input_dim, double tau) {
        QuantileRegressor m;
        m.kind = RegressorKind::linear;
        m.input_dim = input_dim;
        m.tau = tau;
        m.w = Vector::Zero(input_dim);
        m.b = 0.0;
        return m;
    }
};

inline double mean_pinball_loss(const QuantileRegressor& model, const Matrix& x, const Vector& y) {
    double s = 0.0;
    for (int i = 0; i < x.rows(); ++i) s += pinball_loss(y(i), model.predict(x.row(i).transpose()), model.tau);
    return s / static_cast<double>(x.rows());
}

// Mean-pinball-loss gradient of a linear model with respect to (w, b); exact
// away from kinks, a valid subgradient at them.
inline void linear_pinball_subgradient(const Vector& w, double b, const Matrix& x, const Vector& y,
                                       double tau, Vector& grad_w, double& grad_b) {
    const int n = static_cast<int>(x.rows());
    grad_w = Vector::Zero(w.size());
    grad_b = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = pinball_grad(y(i), w.dot(x.row(i).transpose()) + b, tau);
        grad_w += g * x.row(i).transpose();
        grad_b += g;
    }
    grad_w /= static_cast<double>(n);
    grad_b /= static_cast<double>(n);
}

namespace detail {

struct Standardizer {
    Vector mean, scale;  // per input column
    double y_mean = 0.0, y_scale = 1.0;
};

inline Standardizer make_standardizer(const Matrix& x, const Vector& y) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale = Vector::Ones(x.cols());
    for (int d = 0; d < x.cols(); ++d) {
        const double var = (x.col(d).array() - s.mean(d)).square().sum() / n;
        if (var > 0.0) s.scale(d) = std::sqrt(var);
    }
    s.y_mean = y.mean();
    const double y_var = (y.array() - s.y_mean).square().sum() / n;
    if (y_var > 0.0) s.y_scale = std::sqrt(y_var);
    return s;
}

// Map a model fitted on standardized data back to the raw input scale.
inline void unfold(QuantileRegressor& m, const Standardizer& s) {
    if (m.kind == RegressorKind::linear) {
        double b = m.b;
        for (int d = 0; d < m.w.size(); ++d) {
            b -= m.w(d) * s.mean(d) / s.scale(d);
            m.w(d) = m.w(d) / s.scale(d) * s.y_scale;
        }
        m.b = b * s.y_scale + s.y_mean;
    } else {
        for (int d = 0; d < m.w1.cols(); ++d) {
            m.b1 -= m.w1.col(d) * (s.mean(d) / s.scale(d));
            m.w1.col(d) /= s.scale(d);
        }
        m.w2 *= s.y_scale;
        m.b2 = m.b2 * s.y_scale + s.y_mean;
    }
}

inline QuantileRegressor fit_linear(const Matrix& x, const Vector& y, double tau,
                                    const TrainConfig& cfg) {
    const int d = static_cast<int>(x.cols());
    QuantileRegressor m = QuantileRegressor::zero(d, tau);
    Vector w = Vector::Zero(d);
    double b = 0.0;
    Vector best_w = w;
    double best_b = b, best_loss = std::numeric_limits<double>::infinity();
    Vector grad_w(d);
    double grad_b = 0.0;
    // Constant step for the first phase (to travel), then 1/sqrt(t) decay
    // (to settle); the best iterate by training loss is returned.
    const int warmup = (cfg.epochs * 3) / 5;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        linear_pinball_subgradient(w, b, x, y, tau, grad_w, grad_b);
        const double lr =
            epoch < warmup ? cfg.lr : cfg.lr / std::sqrt(static_cast<double>(epoch - warmup + 1));
        w -= lr * grad_w;
        b -= lr * grad_b;
        double loss = 0.0;
        for (int i = 0; i < x.rows(); ++i)
            loss += pinball_loss(y(i), w.dot(x.row(i).transpose()) + b, tau);
        loss /= static_cast<double>(x.rows());
        if (loss < best_loss) {
            best_loss = loss;
            best_w = w;
            best_b = b;
        }
    }
    m.w = best_w;
    m.b = best_b;
    return m;
}

inline QuantileRegressor fit_mlp(const Matrix& x, const Vector& y, double tau,
                                 const TrainConfig& cfg) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    const int h = cfg.hidden_width;
    require(h >= 1, errc::range_error, "hidden width must be >= 1");

    QuantileRegressor m;
    m.kind = RegressorKind::one_hidden_layer;
    m.input_dim = d;
    m.tau = tau;
    rng gen(cfg.seed, "mlp-init");
    const auto uniform = [&gen](double half) { return (2.0 * gen.next_double() - 1.0) * half; };
    const double s1 = std::sqrt(6.0 / static_cast<double>(d + h));
    const double s2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    m.w1 = Matrix::Zero(h, d);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < d; ++j) m.w1(i, j) = uniform(s1);
    m.b1 = Vector::Zero(h);
    m.w2 = Vector::Zero(h);
    for (int i = 0; i < h; ++i) m.w2(i) = uniform(s2);
    m.b2 = 0.0;

    // Adam state.
    Matrix mw1 = Matrix::Zero(h, d), vw1 = Matrix::Zero(h, d);
    Vector mb1 = Vector::Zero(h), vb1 = Vector::Zero(h);
    Vector mw2 = Vector::Zero(h), vw2 = Vector::Zero(h);
    double mb2 = 0.0, vb2 = 0.0;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    double best_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    const int batch = std::max(1, cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int start = 0; start < n; start += batch) {
            const int end = std::min(n, start + batch);
            const double inv = 1.0 / static_cast<double>(end - start);
            Matrix gw1 = Matrix::Zero(h, d);
            Vector gb1 = Vector::Zero(h), gw2 = Vector::Zero(h);
            double gb2 = 0.0;
            for (int i = start; i < end; ++i) {
                const Vector xi = x.row(i).transpose();
                const Vector pre = m.w1 * xi + m.b1;
                const Vector hid = pre.cwiseMax(0.0);
                const double pred = m.w2.dot(hid) + m.b2;
                const double g = pinball_grad(y(i), pred, tau) * inv;
                gw2 += g * hid;
                gb2 += g;
                for (int k = 0; k < h; ++k) {
                    if (pre(k) <= 0.0) continue;
                    const double gk = g * m.w2(k);
                    gb1(k) += gk;
                    gw1.row(k) += gk * xi.transpose();
                }
            }
            ++step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            const auto adam = [&](auto& theta, auto& mom, auto& vel, const auto& grad) {
                mom = beta1 * mom + (1.0 - beta1) * grad;
                vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
                theta -= cfg.adam_lr * (mom / corr1)
                             .cwiseQuotient(((vel / corr2).cwiseSqrt().array() + eps).matrix());
            };
            adam(m.w1, mw1, vw1, gw1);
            adam(m.b1, mb1, vb1, gb1);
            adam(m.w2, mw2, vw2, gw2);
            mb2 = beta1 * mb2 + (1.0 - beta1) * gb2;
            vb2 = beta2 * vb2 + (1.0 - beta2) * gb2 * gb2;
            m.b2 -= cfg.adam_lr * (mb2 / corr1) / (std::sqrt(vb2 / corr2) + eps);
        }
        double loss = 0.0;
        for (int i = 0; i < n; ++i) loss += pinball_loss(y(i), m.predict(x.row(i).transpose()), tau);
        loss /= static_cast<double>(n);
        if (loss < best_loss - cfg.min_improvement) {
            best_loss = loss;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    return m;
}

}  // namespace detail

// Fits psi minimizing mean pinball loss at level tau. Inputs and targets are
// standardized internally; the returned weights are in the original scale.
inline QuantileRegressor fit_quantile_regressor(const Matrix& x, const Vector& y, double tau,
                                                RegressorKind kind, const TrainConfig& cfg = {}) {
    require(std::isfinite(tau) && tau > 0.0 && tau < 1.0, errc::tau_out_of_range,
            "tau must lie in (0, 1)");
    require(x.rows() == y.size(), errc::dim_mismatch,
            "feature rows must match target length");
    require(x.rows() >= 2, errc::degenerate_data, "fitting needs at least two samples");
    require(x.allFinite() && y.allFinite(), errc::non_finite, "training data must be finite");
    require(cfg.epochs >= 1 && cfg.lr > 0.0 && cfg.adam_lr > 0.0, errc::range_error,
            "training config must have positive epochs and learning rates");

    const detail::Standardizer s = detail::make_standardizer(x, y);
    Matrix xs = x;
    for (int d = 0; d < x.cols(); ++d)
        xs.col(d) = (x.col(d).array() - s.mean(d)) / s.scale(d);
    Vector ys = (y.array() - s.y_mean) / s.y_scale;

    QuantileRegressor m = kind == RegressorKind::linear ? detail::fit_linear(xs, ys, tau, cfg)
                                                        : detail::fit_mlp(xs, ys, tau, cfg);
    detail::unfold(m, s);
    return m;
}

// A fitted conditional conformal model: the quantile regressor psi at
// tau = 1-alpha plus the conformal quantile of the signed residuals
// s_i - psi(omega(x_i)). Per-input threshold = psi(omega(x)) + residual
// quantile; it may be negative (empty set) — the correction is one-sided.
struct ScqrModel {
    QuantileRegressor psi;
    double residual_quantile = 0.0;
    double alpha = 0.1;
};

inline ScqrModel calibrate_scqr(const std::vector<CalibrationRecord>& train_records,
                                const std::vector<CalibrationRecord>& residual_records,
                                double alpha, RegressorKind kind, const TrainConfig& cfg = {}) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, errc::alpha_out_of_range,
            "alpha must lie in (0, 1)");
    require(!train_records.empty() && !residual_records.empty(), errc::degenerate_data,
            "both calibration halves must be nonempty");
    const int d = static_cast<int>(train_records.front().feature.size());
    const auto unpack = [d](const std::vector<CalibrationRecord>& records, Matrix& x, Vector& y) {
        x = Matrix::Zero(static_cast<int>(records.size()), d);
        y = Vector::Zero(static_cast<int>(records.size()));
        for (std::size_t i = 0; i < records.size(); ++i) {
            require(records[i].feature.size() == d, errc::dim_mismatch,
                    "all records must share one feature dimension");
            x.row(static_cast<int>(i)) = records[i].feature.transpose();
            y(static_cast<int>(i)) = records[i].score;
        }
    };
    Matrix x_train, x_resid;
    Vector y_train, y_resid;
    unpack(train_records, x_train, y_train);
    unpack(residual_records, x_resid, y_resid);

    ScqrModel model;
    model.alpha = alpha;
    model.psi = fit_quantile_regressor(x_train, y_train, 1.0 - alpha, kind, cfg);
    std::vector<double> residuals(residual_records.size());
    for (int i = 0; i < x_resid.rows(); ++i)
        residuals[static_cast<std::size_t>(i)] = y_resid(i) - model.psi.predict(x_resid.row(i).transpose());
    model.residual_quantile = conformal_quantile(residuals, alpha);
    return model;
}

// Degenerate variant with psi forced to zero: no fit, no split — residuals
// are the raw scores over all records, so thresholds coincide exactly with
// the plain split-conformal threshold on the same records.
inline ScqrModel calibrate_scqr_zero(const std::vector<CalibrationRecord>& records, double alpha,
                                     int input_dim) {
    require(!records.empty(), errc::degenerate_data, "calibration records must be nonempty");
    ScqrModel model;
    model.alpha = alpha;
    model.psi = QuantileRegressor::zero(input_dim, 1.0 - alpha);
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const CalibrationRecord& r : records) scores.push_back(r.score);
    model.residual_quantile = conformal_quantile(scores, alpha);
    return model;
}

inline double scqr_threshold(const ScqrModel& model, const Vector& feature) {
    return model.psi.predict(feature) + model.residual_quantile;
}

}  // namespace graphconf
