#ifndef EXITOPT_MONTECARLO_HPP
#define EXITOPT_MONTECARLO_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "exitopt/closed_form.hpp"
#include "exitopt/errors.hpp"
#include "exitopt/model.hpp"

namespace exitopt {

struct SimConfig {
    std::int64_t n_paths = 0;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    bool antithetic = false;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw InvalidConfig{"n_paths must be >= 1"};
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidConfig{"dt must be > 0"};
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
        throw InvalidConfig{"horizon must be > 0"};
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw InvalidConfig{"antithetic sampling needs an even n_paths"};
}

/// True when the discounted tail beyond the horizon is not yet below e^-20.
inline bool horizon_warning(const SimConfig& cfg, double r) { return r * cfg.horizon < 20.0; }

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;  ///< analytic bound on the horizon-truncation bias
    std::int64_t n_effective = 0;
};

namespace mc_detail {

inline constexpr int kLanes = 8;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++, one independent stream per lane, states kept as
// structure-of-arrays so the generator advances all lanes in lockstep.
struct LaneRng {
    std::uint64_t s0[kLanes], s1[kLanes], s2[kLanes], s3[kLanes];

    void seed_lane(int lane, std::uint64_t run_seed, std::uint64_t path_id) {
        std::uint64_t sm = run_seed ^ (0x100000001b3ULL * (path_id + 1));
        s0[lane] = splitmix64(sm);
        s1[lane] = splitmix64(sm);
        s2[lane] = splitmix64(sm);
        s3[lane] = splitmix64(sm);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void next(std::uint64_t out[kLanes]) {
        for (int i = 0; i < kLanes; ++i) {
            out[i] = rotl(s0[i] + s3[i], 23) + s0[i];
            const std::uint64_t t = s1[i] << 17;
            s2[i] ^= s0[i];
            s3[i] ^= s1[i];
            s1[i] ^= s2[i];
            s0[i] ^= s3[i];
            s2[i] ^= t;
            s3[i] = rotl(s3[i], 45);
        }
    }
};

// log on (0, 1], polynomial after mantissa folding; absolute error < 1e-12.
inline double poly_log(double v) {
    constexpr double kSqrt2 = 1.4142135623730951;
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    double e = static_cast<double>(static_cast<std::int64_t>((bits >> 52) & 0x7ff) - 1023);
    double m = std::bit_cast<double>((bits & 0x000fffffffffffffULL) | 0x3ff0000000000000ULL);
    const bool fold = m > kSqrt2;
    m = fold ? 0.5 * m : m;
    e = fold ? e + 1.0 : e;
    const double t = (m - 1.0) / (m + 1.0);
    const double t2 = t * t;
    const double s =
        t * (2.0 + t2 * (2.0 / 3.0 +
             t2 * (2.0 / 5.0 + t2 * (2.0 / 7.0 + t2 * (2.0 / 9.0 +
             t2 * (2.0 / 11.0 + t2 * (2.0 / 13.0)))))));
    return s + e * 0.6931471805599453;
}

// sin and cos of 2*pi*u for u in [0, 1), quadrant reduction plus Taylor
// kernels on [-pi/4, pi/4]; absolute error < 1e-11.
inline void poly_sincos_2pi(double u, double& sn, double& cs) {
    const double y = 4.0 * u;
    const double q = std::floor(y + 0.5);           // 0..4
    const double phi = (y - q) * (0.5 * std::numbers::pi);
    const double qm = q - 4.0 * std::floor(q * 0.25);  // 0,1,2,3
    const double cq = (qm == 0.0 ? 1.0 : 0.0) - (qm == 2.0 ? 1.0 : 0.0);
    const double sq = (qm == 1.0 ? 1.0 : 0.0) - (qm == 3.0 ? 1.0 : 0.0);
    const double p2 = phi * phi;
    const double sp =
        phi * (1.0 + p2 * (-1.0 / 6.0 + p2 * (1.0 / 120.0 + p2 * (-1.0 / 5040.0 +
               p2 * (1.0 / 362880.0 + p2 * (-1.0 / 39916800.0))))));
    const double cp =
        1.0 + p2 * (-0.5 + p2 * (1.0 / 24.0 + p2 * (-1.0 / 720.0 +
              p2 * (1.0 / 40320.0 + p2 * (-1.0 / 3628800.0 + p2 * (1.0 / 479001600.0))))));
    cs = cq * cp - sq * sp;
    sn = sq * cp + cq * sp;
}

// exp for small arguments (one-step log-increment), degree-12 Taylor;
// relative error < 5e-10 for |u| <= 1, < 1e-12 for |u| <= 0.5.
inline double poly_exp(double u) {
    double s = 1.0 + u * (1.0 / 12.0);
    s = 1.0 + s * u * (1.0 / 11.0);
    s = 1.0 + s * u * (1.0 / 10.0);
    s = 1.0 + s * u * (1.0 / 9.0);
    s = 1.0 + s * u * (1.0 / 8.0);
    s = 1.0 + s * u * (1.0 / 7.0);
    s = 1.0 + s * u * (1.0 / 6.0);
    s = 1.0 + s * u * (1.0 / 5.0);
    s = 1.0 + s * u * (1.0 / 4.0);
    s = 1.0 + s * u * (1.0 / 3.0);
    s = 1.0 + s * u * (1.0 / 2.0);
    s = 1.0 + s * u;
    return s;
}

struct RunSpec {
    double alpha = 0.0, sigma = 0.0, r = 0.0, gamma = 0.0;
    double K = 0.0;       ///< running cost of the simulated objective
    double I = 0.0;       ///< lump sum paid at exit (full objective only)
    double x0 = 0.0;
    double b = 0.0;       ///< exit threshold; 0 means never exit
};

/// Simulates every path of the run and stores its discounted payoff at
/// payoffs[path_id]. Exact log-normal stepping; the exit time is monitored on
/// the time grid; profit integrated by the left-endpoint rule.
inline void simulate_payoffs(const RunSpec& run, const SimConfig& cfg,
                             std::vector<double>& payoffs) {
    const std::int64_t nsteps = std::llround(cfg.horizon / cfg.dt);
    if (nsteps < 1) throw InvalidConfig{"horizon shorter than one step"};
    const double dt = cfg.dt;
    const double c0 = 2.0 * (run.alpha - 0.5 * run.sigma * run.sigma) * dt;
    const double c1 = 2.0 * run.sigma * std::sqrt(dt);
    const bool fast_exp_ok = std::abs(c0) + 8.0 * c1 <= 1.0;
    const double df = std::exp(-run.r * dt);
    const double b2 = run.b > 0.0 ? run.b * run.b : -1.0;
    const double x0sq = run.x0 * run.x0;
    const double qcoef = 0.25 * run.gamma * run.gamma * dt;
    const double kcoef = run.K * dt / (1.0 - df);
    payoffs.assign(static_cast<std::size_t>(cfg.n_paths), 0.0);

    LaneRng rng;
    double x2[kLanes], disc[kLanes], acc[kLanes], steps[kLanes], csign[kLanes];
    double alive[kLanes], hitflag[kLanes];
    std::int64_t path_of[kLanes];
    bool occupied[kLanes];
    std::int64_t next_path = 0;
    int n_occupied = 0;

    auto load_path = [&](int lane) {
        const std::int64_t id = next_path++;
        const std::uint64_t stream = cfg.antithetic ? static_cast<std::uint64_t>(id & ~1LL)
                                                    : static_cast<std::uint64_t>(id);
        rng.seed_lane(lane, cfg.seed, stream);
        csign[lane] = (cfg.antithetic && (id & 1)) ? -1.0 : 1.0;
        x2[lane] = x0sq;
        disc[lane] = 1.0;
        acc[lane] = 0.0;
        steps[lane] = 0.0;
        alive[lane] = 1.0;
        hitflag[lane] = 0.0;
        path_of[lane] = id;
        occupied[lane] = true;
        ++n_occupied;
    };

    auto finalize = [&](int lane) {
        double pay = qcoef * acc[lane] - kcoef * (1.0 - disc[lane]);
        if (hitflag[lane] != 0.0 && run.I != 0.0) pay -= run.I * disc[lane];
        payoffs[static_cast<std::size_t>(path_of[lane])] = pay;
        occupied[lane] = false;
        --n_occupied;
        if (next_path < cfg.n_paths) load_path(lane);
    };

    for (int lane = 0; lane < kLanes; ++lane) {
        x2[lane] = -1.0;  // idle lanes never trip the hit test
        disc[lane] = acc[lane] = steps[lane] = 0.0;
        alive[lane] = hitflag[lane] = 0.0;
        csign[lane] = 1.0;
        occupied[lane] = false;
        if (next_path < cfg.n_paths) load_path(lane);
    }

    const double horizon_steps = static_cast<double>(nsteps);
    std::uint64_t r1[kLanes], r2[kLanes];
    double u1[kLanes], u2[kLanes], z1[kLanes], z2[kLanes];

    while (n_occupied > 0) {
        // paths stop mid-flight by freezing their lane; repack only at pair
        // boundaries so a fresh path never consumes its predecessor's draws
        for (int i = 0; i < kLanes; ++i)
            if (occupied[i] && alive[i] == 0.0) finalize(i);
        if (n_occupied == 0) break;
        rng.next(r1);
        rng.next(r2);
        for (int i = 0; i < kLanes; ++i) {
            u1[i] = (static_cast<double>(r1[i] >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
            u2[i] = static_cast<double>(r2[i] >> 11) * 0x1.0p-53;          // [0, 1)
        }
        for (int i = 0; i < kLanes; ++i) {
            const double mag = std::sqrt(-2.0 * poly_log(u1[i]));
            double sn, cs;
            poly_sincos_2pi(u2[i], sn, cs);
            z1[i] = mag * cs;
            z2[i] = mag * sn;
        }
        for (const double* z : {+z1, +z2}) {
            if (fast_exp_ok) {
                for (int i = 0; i < kLanes; ++i) {
                    const double at_horizon = steps[i] >= horizon_steps ? 1.0 : 0.0;
                    const double at_barrier = x2[i] <= b2 ? 1.0 : 0.0;
                    const double was = alive[i];
                    hitflag[i] += was * (1.0 - at_horizon) * at_barrier;
                    const double a = was * (1.0 - std::max(at_horizon, at_barrier));
                    alive[i] = a;
                    acc[i] += a * disc[i] * x2[i];
                    const double growth = poly_exp(c0 + c1 * csign[i] * z[i]);
                    x2[i] *= 1.0 + a * (growth - 1.0);
                    disc[i] *= 1.0 + a * (df - 1.0);
                    steps[i] += a;
                }
            } else {
                for (int i = 0; i < kLanes; ++i) {
                    const double at_horizon = steps[i] >= horizon_steps ? 1.0 : 0.0;
                    const double at_barrier = x2[i] <= b2 ? 1.0 : 0.0;
                    const double was = alive[i];
                    hitflag[i] += was * (1.0 - at_horizon) * at_barrier;
                    const double a = was * (1.0 - std::max(at_horizon, at_barrier));
                    alive[i] = a;
                    acc[i] += a * disc[i] * x2[i];
                    const double growth = std::exp(c0 + c1 * csign[i] * z[i]);
                    x2[i] *= 1.0 + a * (growth - 1.0);
                    disc[i] *= 1.0 + a * (df - 1.0);
                    steps[i] += a;
                }
            }
        }
    }
}

/// Mean / standard error in path-index order; antithetic runs average pairs
/// first. Deterministic regardless of how lanes were scheduled.
inline MCEstimate reduce_payoffs(std::span<const double> payoffs, bool antithetic) {
    MCEstimate est;
    std::vector<double> samples;
    if (antithetic) {
        samples.reserve(payoffs.size() / 2);
        for (std::size_t j = 0; j + 1 < payoffs.size(); j += 2)
            samples.push_back(0.5 * (payoffs[j] + payoffs[j + 1]));
    } else {
        samples.assign(payoffs.begin(), payoffs.end());
    }
    est.n_effective = static_cast<std::int64_t>(samples.size());
    double sum = 0.0, comp = 0.0;
    for (double s : samples) {  // compensated summation, order-independent of scheduling
        const double y = s - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    est.mean = sum / static_cast<double>(samples.size());
    double ss = 0.0;
    for (double s : samples) ss += (s - est.mean) * (s - est.mean);
    if (samples.size() > 1)
        est.std_error = std::sqrt(ss / (static_cast<double>(samples.size()) *
                                        static_cast<double>(samples.size() - 1)));
    return est;
}

inline double tail_bound(const RunSpec& run, const SimConfig& cfg) {
    const double m = admissibility_margin(run.alpha, run.sigma, run.r);
    const double B = particular_coefficient(run.alpha, run.sigma, run.r, run.gamma);
    double bound = B * run.x0 * run.x0 * std::exp(-m * cfg.horizon) +
                   std::abs(run.K) / run.r * std::exp(-run.r * cfg.horizon);
    if (run.I != 0.0) bound += std::abs(run.I) * std::exp(-run.r * cfg.horizon);
    return bound;
}

inline MCEstimate run_estimate(const RunSpec& run, const SimConfig& cfg) {
    validate(cfg);
    if (!(admissibility_margin(run.alpha, run.sigma, run.r) > 0.0)) throw InadmissibleParams{};
    if (run.b < 0.0 || (run.b > 0.0 && !(run.x0 > run.b))) throw InvalidThreshold{};
    std::vector<double> payoffs;
    simulate_payoffs(run, cfg, payoffs);
    MCEstimate est = reduce_payoffs(payoffs, cfg.antithetic);
    est.tail_bound = tail_bound(run, cfg);
    return est;
}

} // namespace mc_detail

/// Monte Carlo value of the threshold policy "exit when demand first falls to
/// b" for the reduced (no sunk cost) objective.
inline MCEstimate simulate_threshold_value(const ReducedParams& p, double x0, double b,
                                           const SimConfig& cfg) {
    mc_detail::RunSpec run{p.alpha, p.sigma, p.r, p.gamma, p.K_eff, 0.0, x0, b};
    return mc_detail::run_estimate(run, cfg);
}

/// Full-objective variant: running cost K and the lump sum I paid at exit.
inline MCEstimate simulate_threshold_value(const ModelParams& p, double x0, double b,
                                           const SimConfig& cfg) {
    validate(p);
    mc_detail::RunSpec run{p.alpha, p.sigma, p.r, p.gamma, p.K, p.I, x0, b};
    return mc_detail::run_estimate(run, cfg);
}

/// Values every threshold in b_list with common random numbers (same seed).
inline std::vector<std::pair<double, MCEstimate>> threshold_sweep(const ReducedParams& p,
                                                                  double x0,
                                                                  std::span<const double> b_list,
                                                                  const SimConfig& cfg) {
    std::vector<std::pair<double, MCEstimate>> out;
    out.reserve(b_list.size());
    for (double b : b_list) out.emplace_back(b, simulate_threshold_value(p, x0, b, cfg));
    return out;
}

struct ConsistencyReport {
    MCEstimate full;        ///< MC of the full objective with explicit exit cost
    double analytic = 0.0;  ///< closed form with K_eff, shifted by -I
    double threshold = 0.0; ///< policy threshold used, x_star(K_eff)
    double diff = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Validates the sunk-cost reduction: simulate the full objective at the
/// reduced problem's optimal threshold and compare with the shifted closed
/// form.
inline ConsistencyReport sunk_cost_consistency(const ModelParams& p, double x0,
                                               const SimConfig& cfg,
                                               double bias_allowance = 0.05) {
    const ReducedParams rp = reduce_sunk_cost(p);
    if (rp.trivial_never_exit()) throw TrivialReduction{};
    const ClosedFormSolution sol = closed_form(rp);
    ConsistencyReport rep;
    rep.threshold = sol.x_star;
    rep.full = simulate_threshold_value(p, x0, sol.x_star, cfg);
    rep.analytic = value(sol, x0) + rp.value_offset;
    rep.diff = std::abs(rep.full.mean - rep.analytic);
    rep.tolerance = 3.0 * rep.full.std_error + rep.full.tail_bound + bias_allowance;
    rep.pass = rep.diff <= rep.tolerance;
    return rep;
}

} // namespace exitopt

#endif
