#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "tagnav/errors.hpp"
#include "tagnav/geometry.hpp"
#include "tagnav/trajectory.hpp"

namespace tagnav {

/// Fully determines a discrete Butterworth low-pass filter.
struct FilterSpec {
    int order = 2;             // n_s
    double cutoff = 1.0;       // omega_c, rad/s
    double sample_rate = 30.0; // Hz

    void validate() const {
        if (order < 1) throw InvalidSpec("filter order must be >= 1");
        if (!(sample_rate > 0.0)) throw InvalidSpec("sample rate must be positive");
        if (!(cutoff > 0.0) || !(cutoff < M_PI * sample_rate))
            throw InvalidSpec("cutoff must lie in (0, Nyquist) rad/s");
    }

    double nyquist() const { return M_PI * sample_rate; }
};

/// Normalized Butterworth denominator coefficients a_0..a_n (ascending
/// powers of s), a_0 = a_n = 1; roots on the unit circle, left half-plane.
struct AnalogPrototype {
    std::vector<double> denominator;
    int order() const { return static_cast<int>(denominator.size()) - 1; }
};

/// Left-half-plane poles of the normalized Butterworth polynomial.
inline std::vector<std::complex<double>> butterworth_poles(int order) {
    std::vector<std::complex<double>> poles;
    for (int k = 1; k <= order; ++k) {
        const double phi = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
        poles.emplace_back(std::cos(phi), std::sin(phi));
    }
    return poles;
}

inline AnalogPrototype butterworth_prototype(int order) {
    if (order < 1) throw InvalidSpec("filter order must be >= 1");
    std::vector<std::complex<double>> poly = {1.0};
    for (const auto& p : butterworth_poles(order)) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i] * (-p);
            next[i + 1] += poly[i];
        }
        poly = std::move(next);
    }
    AnalogPrototype proto;
    for (const auto& c : poly) proto.denominator.push_back(c.real());
    return proto;
}

/// One normalized digital biquad (a0 = 1).
struct Sos {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

    bool stable() const {
        // poles of z^2 + a1 z + a2 inside the unit circle
        return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
    }
};

/**
 * Second-order-section cascade with per-section delay state. Single-owner:
 * one instance must not filter two streams concurrently.
 */
class DiscreteFilter {
public:
    DiscreteFilter(std::vector<Sos> sections, double gain, double sample_rate)
        : sections_(std::move(sections)), gain_(gain), sample_rate_(sample_rate) {
        state_.assign(sections_.size(), {0.0, 0.0});
    }

    const std::vector<Sos>& sections() const { return sections_; }
    double gain() const { return gain_; }
    double sample_rate() const { return sample_rate_; }

    void reset() { state_.assign(sections_.size(), {0.0, 0.0}); }

    /// Initialize the delay registers to the steady-state response of a
    /// constant input x0, so filtering starts without a transient to zero.
    void prime(double x0) {
        double x = gain_ * x0;
        for (size_t i = 0; i < sections_.size(); ++i) {
            const Sos& s = sections_[i];
            const double y = x * s.dc_gain();
            state_[i][1] = s.b2 * x - s.a2 * y;
            state_[i][0] = s.b1 * x - s.a1 * y + state_[i][1];
            x = y;
        }
    }

    double step(double x) {
        x *= gain_;
        for (size_t i = 0; i < sections_.size(); ++i) {
            const Sos& s = sections_[i];
            const double y = s.b0 * x + state_[i][0];
            state_[i][0] = s.b1 * x - s.a1 * y + state_[i][1];
            state_[i][1] = s.b2 * x - s.a2 * y;
            x = y;
        }
        return x;
    }

    /// Cascade magnitude at angular frequency omega [rad/s], in dB.
    double magnitude_db(double omega) const {
        const std::complex<double> z =
            std::exp(std::complex<double>(0.0, -omega / sample_rate_));
        std::complex<double> h = gain_;
        for (const auto& s : sections_)
            h *= (s.b0 + s.b1 * z + s.b2 * z * z) /
                 (1.0 + s.a1 * z + s.a2 * z * z);
        return 20.0 * std::log10(std::abs(h));
    }

private:
    std::vector<Sos> sections_;
    double gain_;
    double sample_rate_;
    std::vector<std::array<double, 2>> state_;
};

/**
 * Design the discrete filter: analog Butterworth prototype scaled to the
 * cutoff, then bilinear transform with frequency pre-warping so the -3 dB
 * point lands exactly at omega_c. DC gain of the cascade is normalized to 1.
 */
inline DiscreteFilter design(const FilterSpec& spec) {
    spec.validate();
    const double fs = spec.sample_rate;
    const double K = 2.0 * fs;
    // pre-warped analog cutoff
    const double W = K * std::tan(spec.cutoff / K);

    std::vector<Sos> sections;
    const int n = spec.order;
    for (int k = 1; k <= n / 2; ++k) {
        const double phi = M_PI * (2.0 * k + n - 1.0) / (2.0 * n);
        const double zeta = -std::cos(phi);  // in (0, 1]
        // analog section: W^2 / (s^2 + 2*zeta*W*s + W^2)
        const double a1 = 2.0 * zeta * W, a2 = W * W, c = W * W;
        const double d0 = K * K + a1 * K + a2;
        Sos s;
        s.b0 = c / d0;
        s.b1 = 2.0 * c / d0;
        s.b2 = c / d0;
        s.a1 = (2.0 * a2 - 2.0 * K * K) / d0;
        s.a2 = (K * K - a1 * K + a2) / d0;
        sections.push_back(s);
    }
    if (n % 2 == 1) {
        // analog section: W / (s + W)
        const double d0 = K + W;
        Sos s;
        s.b0 = W / d0;
        s.b1 = W / d0;
        s.b2 = 0.0;
        s.a1 = (W - K) / d0;
        s.a2 = 0.0;
        sections.push_back(s);
    }
    double dc = 1.0;
    for (const auto& s : sections) dc *= s.dc_gain();
    return DiscreteFilter(std::move(sections), 1.0 / dc, fs);
}

struct BodePoint {
    double omega = 0.0;         // rad/s
    double magnitude_db = 0.0;
    double phase_deg = 0.0;     // in (-order * 180, 0]
};

/**
 * Analog response of the cutoff-scaled Butterworth transfer function at the
 * given frequencies. Phase accumulates per pole, which keeps it naturally
 * unwrapped.
 */
inline std::vector<BodePoint> frequency_response(const FilterSpec& spec,
                                                 const std::vector<double>& omegas) {
    spec.validate();
    const auto poles = butterworth_poles(spec.order);
    std::vector<BodePoint> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (!(w > 0.0)) throw InvalidParameter("frequencies must be positive");
        const double wn = w / spec.cutoff;
        double log_mag = 0.0, phase = 0.0;
        for (const auto& p : poles) {
            const std::complex<double> d = std::complex<double>(0.0, wn) - p;
            log_mag -= std::log10(std::abs(d));
            phase -= std::arg(d);
        }
        out.push_back({w, 20.0 * log_mag, phase * 180.0 / M_PI});
    }
    return out;
}

/// Causal forward filtering with steady-state initialization on the first
/// sample. Output delay relative to the input is inherent to the filter and
/// is not compensated here.
inline std::vector<double> filter_signal(DiscreteFilter& filter,
                                         const std::vector<double>& samples) {
    if (samples.empty()) throw EmptyInput("cannot filter an empty signal");
    filter.reset();
    filter.prime(samples.front());
    std::vector<double> out;
    out.reserve(samples.size());
    for (double x : samples) out.push_back(filter.step(x));
    return out;
}

inline std::vector<double> filter_signal(const FilterSpec& spec,
                                         const std::vector<double>& samples) {
    DiscreteFilter f = design(spec);
    return filter_signal(f, samples);
}

/// Offline zero-phase variant: forward pass, then a reversed pass. Non-causal,
/// evaluation use only.
inline std::vector<double> filter_signal_zero_phase(const FilterSpec& spec,
                                                    const std::vector<double>& samples) {
    std::vector<double> fwd = filter_signal(spec, samples);
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> back = filter_signal(spec, fwd);
    std::reverse(back.begin(), back.end());
    return back;
}

// ---- spectrum analysis ------------------------------------------------

namespace detail {

/// DFT of a real signal; radix-2 when the length allows, direct otherwise.
inline std::vector<std::complex<double>> dft(const std::vector<double>& x) {
    const size_t n = x.size();
    const bool pow2 = n > 0 && (n & (n - 1)) == 0;
    std::vector<std::complex<double>> X(n);
    if (!pow2) {
        for (size_t k = 0; k < n; ++k) {
            std::complex<double> acc = 0.0;
            for (size_t j = 0; j < n; ++j)
                acc += x[j] * std::polar(1.0, -2.0 * M_PI * double(k * j % n) / n);
            X[k] = acc;
        }
        return X;
    }
    for (size_t i = 0; i < n; ++i) X[i] = x[i];
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(X[i], X[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const std::complex<double> wl = std::polar(1.0, -2.0 * M_PI / double(len));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w = 1.0;
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = X[i + k];
                const std::complex<double> v = X[i + k + len / 2] * w;
                X[i + k] = u + v;
                X[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    return X;
}

}  // namespace detail

/// One-sided amplitude spectrum of a uniformly sampled signal.
struct Spectrum {
    std::vector<double> omega;      // rad/s, bin centers from DC upward
    std::vector<double> amplitude;  // one-sided amplitudes
    double bin_width = 0.0;         // rad/s
};

inline Spectrum amplitude_spectrum(const std::vector<double>& samples,
                                   double sample_rate) {
    if (samples.size() < 16)
        throw TooFewSamples("spectrum needs >= 16 samples, got " +
                            std::to_string(samples.size()));
    const size_t n = samples.size();
    const auto X = detail::dft(samples);
    Spectrum sp;
    sp.bin_width = 2.0 * M_PI * sample_rate / double(n);
    const size_t half = n / 2;
    for (size_t k = 0; k <= half; ++k) {
        const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
        sp.omega.push_back(double(k) * sp.bin_width);
        sp.amplitude.push_back(scale * std::abs(X[k]) / double(n));
    }
    return sp;
}

/**
 * Cutoff selection from the signal spectrum: the smallest frequency at which
 * the cumulative squared amplitude (DC excluded) reaches the requested
 * fraction of the total, clamped below Nyquist. The energy-fraction rule is
 * a policy knob, not a law; the default keeps 95% of the non-DC content.
 */
inline double suggest_cutoff(const std::vector<double>& samples,
                             double sample_rate, double energy_fraction = 0.95) {
    if (!(energy_fraction > 0.0) || energy_fraction > 1.0)
        throw InvalidParameter("energy fraction must be in (0, 1]");
    const Spectrum sp = amplitude_spectrum(samples, sample_rate);
    double total = 0.0;
    for (size_t k = 1; k < sp.amplitude.size(); ++k)
        total += sp.amplitude[k] * sp.amplitude[k];
    const double nyquist = M_PI * sample_rate;
    if (total <= 0.0) return std::min(sp.bin_width, 0.999 * nyquist);
    double cum = 0.0;
    for (size_t k = 1; k < sp.amplitude.size(); ++k) {
        cum += sp.amplitude[k] * sp.amplitude[k];
        if (cum >= energy_fraction * total)
            return std::min(sp.omega[k], 0.999 * nyquist);
    }
    return 0.999 * nyquist;
}

// ---- trajectory filtering ---------------------------------------------

/**
 * Filter x, y, z and unwrapped yaw of a raw trajectory independently.
 * Gaps are filled by zero-order hold before filtering and re-marked as
 * "interpolated" in the output.
 */
inline Trajectory filter_trajectory(const FilterSpec& spec, const Trajectory& raw) {
    spec.validate();
    const size_t n = raw.points.size();
    if (n == 0 || raw.pose_count() == 0)
        throw EmptyInput("trajectory has no poses to filter");
    if (n >= 2) {
        const double period = 1.0 / spec.sample_rate;
        for (size_t i = 1; i < n; ++i) {
            const double dt = raw.points[i].t - raw.points[i - 1].t;
            if (std::abs(dt - period) > 0.01 * period)
                throw NonUniformSampling("timestamp jitter exceeds 1% of the frame period at sample " +
                                         std::to_string(i));
        }
    }

    // zero-order-hold fill, yaw unwrapped to a continuous signal
    size_t first_valid = 0;
    while (!raw.points[first_valid].has_pose) ++first_valid;
    std::vector<double> xs(n), ys(n), zs(n), ths(n);
    Pose held = raw.points[first_valid].pose;
    double th_cont = held.theta;
    for (size_t i = 0; i < n; ++i) {
        if (raw.points[i].has_pose) {
            held = raw.points[i].pose;
            th_cont += wrap_angle(held.theta - th_cont);
        }
        xs[i] = held.x;
        ys[i] = held.y;
        zs[i] = held.z;
        ths[i] = th_cont;
    }

    const auto fx = filter_signal(spec, xs);
    const auto fy = filter_signal(spec, ys);
    const auto fz = filter_signal(spec, zs);
    const auto fth = filter_signal(spec, ths);

    Trajectory out;
    out.points.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        TrajectoryPoint p = raw.points[i];
        const bool was_gap = !p.has_pose;
        p.has_pose = true;
        p.pose = Pose(fx[i], fy[i], fz[i], fth[i]);
        if (was_gap) {
            p.cause = "interpolated";
            p.converged = false;
            p.rms = 0.0;
        }
        out.points.push_back(p);
    }
    return out;
}

}  // namespace tagnav
