#include "fgmhd/scheduler.hpp"

#include <cmath>

#include "fgmhd/errors.hpp"

namespace fgmhd {

SchedulerState mmds_step(const SchedulerState& state, double l_val, const MmdsConfig& cfg) {
    if (!(l_val >= 0.0) || !std::isfinite(l_val))
        throw NegativeLoss("validation loss must be finite and >= 0");
    if (cfg.mu < 0.0 || cfg.mu > 1.0 || cfg.gamma <= 0.0)
        throw config_error("mmds needs mu in [0,1] and gamma > 0");

    SchedulerState next = state;
    const double dl = std::max(0.0, state.l_prev - l_val);
    next.m = cfg.mu * state.m + (1.0 - cfg.mu) * cfg.gamma * dl;
    next.lambda = state.lambda + next.m;
    next.l_prev = l_val;
    next.epoch = state.epoch + 1;
    return next;
}

double exp_lambda(int t, const ExpScheduleConfig& cfg) {
    if (cfg.epochs < 1) throw config_error("exp schedule needs epochs >= 1");
    if (t < 0 || t > cfg.epochs) throw config_error("epoch outside [0, E]");
    if (t == cfg.epochs) return cfg.lambda_final;
    const double k = cfg.rate;
    return cfg.lambda_final * std::expm1(k * t / cfg.epochs) / std::expm1(k);
}

double smoothness(const std::vector<double>& losses, int window) {
    const int n = static_cast<int>(losses.size());
    if (window < 2 || n < window) throw SeriesTooShort("need at least `window` >= 2 samples");

    double total = 0.0;
    const int n_windows = n - window + 1;
    for (int start = 0; start < n_windows; ++start) {
        // shift by the window's first value: variance is unchanged and a
        // constant window comes out exactly zero
        const double base = losses[start];
        double mean = 0.0;
        for (int i = 0; i < window; ++i) mean += losses[start + i] - base;
        mean /= window;
        double var = 0.0;
        for (int i = 0; i < window; ++i) {
            const double d = (losses[start + i] - base) - mean;
            var += d * d;
        }
        total += var / (window - 1);
    }
    return total / n_windows;
}

int convergence_epoch(const std::vector<double>& losses, int window) {
    const int n = static_cast<int>(losses.size());
    if (n < window + 50) return -1;

    std::vector<double> smoothed(n - window + 1);
    double acc = 0.0;
    for (int i = 0; i < window; ++i) acc += losses[i];
    smoothed[0] = acc / window;
    for (int i = window; i < n; ++i) {
        acc += losses[i] - losses[i - window];
        smoothed[i - window + 1] = acc / window;
    }

    for (int e = 0; e + 50 < static_cast<int>(smoothed.size()); ++e) {
        const double ref = std::abs(smoothed[e]) > 1e-12 ? std::abs(smoothed[e]) : 1e-12;
        if (std::abs(smoothed[e + 50] - smoothed[e]) / ref < 0.01) return e + window - 1;
    }
    return -1;
}

}  // namespace fgmhd
