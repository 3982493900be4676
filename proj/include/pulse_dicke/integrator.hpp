#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pulse_dicke/model.hpp"

namespace pulse_dicke {

struct IntegratorConfig {
    int steps_per_unit_time{2000};
    // Repeat the run at half the step size and report the Richardson estimate
    // of the end-state error.
    bool richardson_check{false};
    double norm_tolerance{1e-8};
    int tail_levels{5};
    double tail_tolerance{1e-8};
    bool enforce_truncation{true};
    int min_steps_per_segment{8};

    void validate() const {
        if (steps_per_unit_time < 1) throw Error(ErrorCode::InvalidArgument, "steps_per_unit_time must be >= 1");
        if (!(norm_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "norm_tolerance must be positive");
        if (tail_levels < 1) throw Error(ErrorCode::InvalidArgument, "tail_levels must be >= 1");
        if (!(tail_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tail_tolerance must be positive");
        if (min_steps_per_segment < 1) throw Error(ErrorCode::InvalidArgument, "min_steps_per_segment must be >= 1");
    }
};

// Coupling lambda(t) over [0, duration]. `kink` marks a time where lambda(t)
// is not smooth; integration segments are split there. Negative means none.
struct CouplingSchedule {
    double duration{0.0};
    double kink{-1.0};
    std::function<double(double)> at;

    static CouplingSchedule pulse(const PulseProfile& profile) {
        profile.validate();
        return {profile.duration(), profile.apex_time(), [profile](double t) { return pulse_value(profile, t); }};
    }

    static CouplingSchedule constant(double lambda, double duration) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw Error(ErrorCode::InvalidArgument, "coupling must be non-negative and finite");
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw Error(ErrorCode::InvalidArgument, "duration must be positive and finite");
        return {duration, -1.0, [lambda](double) { return lambda; }};
    }
};

// Evenly spaced snapshot times over [0, duration]; the last entry is exactly
// `duration`.
inline std::vector<double> sample_times(double duration, int sample_count) {
    if (sample_count < 2) throw Error(ErrorCode::InvalidArgument, "sample_count must be >= 2");
    std::vector<double> t(sample_count);
    for (int i = 0; i < sample_count; ++i) t[i] = duration * double(i) / double(sample_count - 1);
    t.back() = duration;
    return t;
}

// Fixed-step classical RK4 on [t0, t1] with `steps` equal steps. `rhs(t, y, dy)`
// writes dy/dt into dy. The scratch buffers are reused across calls.
template <class State>
class Rk4 {
public:
    template <class Rhs>
    void advance(State& y, double t0, double t1, int steps, Rhs&& rhs) {
        const double h = (t1 - t0) / steps;
        if (k1_.size() != y.size()) {
            k1_ = y; k2_ = y; k3_ = y; k4_ = y; tmp_ = y;
        }
        for (int s = 0; s < steps; ++s) {
            const double t = t0 + s * h;
            rhs(t, y, k1_);
            tmp_ = y + (0.5 * h) * k1_;
            rhs(t + 0.5 * h, tmp_, k2_);
            tmp_ = y + (0.5 * h) * k2_;
            rhs(t + 0.5 * h, tmp_, k3_);
            tmp_ = y + h * k3_;
            rhs(t + h, tmp_, k4_);
            y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        }
    }

private:
    State k1_, k2_, k3_, k4_, tmp_;
};

// Integration segments between consecutive snapshot times, additionally split
// at the pulse apex so that no step straddles the kink of the envelope.
struct Segment {
    double t0;
    double t1;
    int steps;
    bool ends_on_sample;
};

inline std::vector<Segment> plan_segments(const std::vector<double>& snapshots, double kink, const IntegratorConfig& cfg) {
    std::vector<Segment> out;
    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
        const double a = snapshots[i];
        const double b = snapshots[i + 1];
        auto push = [&](double x, double y, bool sample) {
            const int steps = std::max(cfg.min_steps_per_segment, int(std::ceil((y - x) * cfg.steps_per_unit_time)));
            out.push_back({x, y, steps, sample});
        };
        if (kink > a && kink < b) {
            push(a, kink, false);
            push(kink, b, true);
        } else {
            push(a, b, true);
        }
    }
    return out;
}

}  // namespace pulse_dicke
