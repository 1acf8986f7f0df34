#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace routelab {

/**
 * Two-timescale step-size schedule
 *   c(n) = c0 / (1+n)^gamma_c   (fast, critic)
 *   b(n) = b0 / (1+n)^gamma_b   (slow, actor)
 * with 0.5 < gamma_c < gamma_b <= 1 so that both sums diverge, the squared
 * sums converge, and b(n)/c(n) -> 0.
 */
struct StepSchedule {
    double c0 = 1.0;
    double b0 = 1.0;
    double gamma_c = 0.6;
    double gamma_b = 0.85;

    void validate() const {
        if (!(c0 > 0.0) || !(b0 >= 0.0))
            throw std::invalid_argument("StepSchedule: constants must be positive (b0 >= 0)");
        if (!(gamma_c > 0.5 && gamma_c < gamma_b && gamma_b <= 1.0))
            throw std::invalid_argument("StepSchedule: need 0.5 < gamma_c < gamma_b <= 1");
    }

    double critic_step(long n) const { return c0 / std::pow(1.0 + static_cast<double>(n), gamma_c); }
    double actor_step(long n) const { return b0 / std::pow(1.0 + static_cast<double>(n), gamma_b); }
};

/// Step sizes (c(n), b(n)) at iteration n.
inline std::pair<double, double> step_sizes(const StepSchedule& schedule, long n) {
    if (n < 0) throw std::invalid_argument("step_sizes: n must be nonnegative");
    return {schedule.critic_step(n), schedule.actor_step(n)};
}

}  // namespace routelab
