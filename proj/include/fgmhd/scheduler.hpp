#pragma once

#include <vector>

namespace fgmhd {

struct MmdsConfig {
    double mu = 0.9;     // momentum coefficient in [0,1]
    double gamma = 1.0;  // scale factor > 0
    int epochs = 0;      // advisory horizon E
};

/// Accumulator of the momentum-driven weight schedule. lambda never
/// decreases: the momentum term only receives non-negative improvements.
struct SchedulerState {
    double lambda = 0.0;
    double m = 0.0;
    double l_prev = 0.0;
    int epoch = 0;
};

// One schedule update:
//   dl     = max(0, l_prev - l_val)
//   m      = mu*m + (1-mu)*gamma*dl
//   lambda = lambda + m
// then l_prev <- l_val and the epoch counter advances.
SchedulerState mmds_step(const SchedulerState& state, double l_val, const MmdsConfig& cfg);

struct ExpScheduleConfig {
    int epochs = 1;            // E
    double lambda_final = 1.0;
    double rate = 5.0;         // curvature k
};

// Fixed baseline lambda(t) = lambda_final * (e^{k t/E} - 1) / (e^k - 1);
// 0 at t=0 and exactly lambda_final at t=E.
double exp_lambda(int t, const ExpScheduleConfig& cfg);

// Mean over all stride-1 windows of the within-window sample variance.
// Lower means a smoother series.
double smoothness(const std::vector<double>& losses, int window);

// First epoch after which the window-averaged loss moves by less than 1%
// over the following 50 epochs; -1 when the series never settles. The
// smoothing window is the same one used by smoothness().
int convergence_epoch(const std::vector<double>& losses, int window = 20);

// CSV header for the mu/gamma sweep emitted by the CLI.
inline constexpr const char* kSweepCsvHeader = "mu,gamma,final_loss,smoothness,convergence_epoch";

}  // namespace fgmhd
