#include "aqe/bias_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "aqe/errors.hpp"

namespace aqe {

double ErrorDist::sample(Rng& rng) const {
    switch (kind) {
    case Kind::Uniform: return rng.uniform(-spread, spread);
    case Kind::Gaussian: return spread * rng.normal();
    }
    return 0.0;
}

void ZSampleConfig::validate() const {
    if (ensemble_size < 1)
        throw std::invalid_argument("ZSampleConfig: N must be >= 1");
    if (keep_k < 1 || keep_k > ensemble_size)
        throw std::invalid_argument("ZSampleConfig: K must be in [1, N]");
    if (num_actions < 1)
        throw std::invalid_argument("ZSampleConfig: need at least one action");
    if (error_dist.spread <= 0.0)
        throw std::invalid_argument("ZSampleConfig: spread must be positive");
    if (q_pi.size() != 0 && q_pi.size() != num_actions)
        throw std::invalid_argument("ZSampleConfig: q_pi length != |A|");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("ZSampleConfig: gamma must be in [0, 1)");
}

Vec ZSampleConfig::q_pi_or_default() const {
    if (q_pi.size() == static_cast<Eigen::Index>(num_actions)) return q_pi;
    return Vec::Zero(num_actions);
}

namespace {

/// Mean of the k smallest among the first n entries of each column of
/// `errors` plus q_pi, maximized over actions (columns).
double max_keep_mean(const Mat& errors, const Vec& q_pi, int n, int k,
                     std::vector<double>& scratch) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < errors.cols(); ++a) {
        scratch.resize(n);
        for (int j = 0; j < n; ++j) scratch[j] = q_pi(a) + errors(j, a);
        std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += scratch[j];
        best = std::max(best, sum / static_cast<double>(k));
    }
    return best;
}

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double ci99_half_width(double sum, double sum_sq, long n) {
    const double mean = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    // Normal-approximation 99% interval.
    return 2.5758293035489004 * std::sqrt(var / static_cast<double>(n));
}

} // namespace

double sample_Z(const ZSampleConfig& config, Rng& rng) {
    config.validate();
    const int n = config.ensemble_size;
    const int actions = config.num_actions;
    const Vec q_pi = config.q_pi_or_default();
    Mat errors(n, actions);
    for (int j = 0; j < n; ++j)
        for (int a = 0; a < actions; ++a)
            errors(j, a) = config.error_dist.sample(rng);
    std::vector<double> scratch;
    const double keep = max_keep_mean(errors, q_pi, n, config.keep_k, scratch);
    return config.gamma * (keep - q_pi.maxCoeff());
}

EZEstimate estimate_EZ(const ZSampleConfig& config, long num_samples,
                       Rng& rng) {
    config.validate();
    if (num_samples < 1)
        throw std::invalid_argument("estimate_EZ: need at least one sample");
    KahanSum sum, sum_sq;
    for (long i = 0; i < num_samples; ++i) {
        const double z = sample_Z(config, rng);
        sum.add(z);
        sum_sq.add(z * z);
    }
    EZEstimate est;
    est.samples = num_samples;
    est.mean = sum.sum / static_cast<double>(num_samples);
    est.half_width_99 = ci99_half_width(sum.sum, sum_sq.sum, num_samples);
    return est;
}

namespace {

constexpr double kGamma = 0.99;
constexpr int kActions = 3;

TheoremCheck make_check(const std::string& name, const std::string& detail,
                        double estimate, double half_width, bool pass) {
    TheoremCheck c;
    c.name = name;
    c.detail = detail;
    c.estimate = estimate;
    c.half_width = half_width;
    c.pass = pass;
    return c;
}

/// Part 1: E[Z_{N,N}] >= 0, checked for each N as mean > -half_width.
void check_part1(Theorem1Report& report, long samples, std::uint64_t seed) {
    for (int n : {1, 2, 5, 10}) {
        ZSampleConfig cfg;
        cfg.ensemble_size = n;
        cfg.keep_k = n;
        cfg.gamma = kGamma;
        cfg.num_actions = kActions;
        Rng rng = Rng::stream(seed, 0x1000 + n);
        const EZEstimate est = estimate_EZ(cfg, samples, rng);
        const bool pass = est.mean > -est.half_width_99;
        report.checks.push_back(make_check(
            "part1_keep_all_nonnegative_N" + std::to_string(n),
            "E[Z_{N,N}] with N=" + std::to_string(n), est.mean,
            est.half_width_99, pass));
    }
}

/// Parts 2 and 3, samplewise: on shared error draws the keep-K mean must be
/// nondecreasing in K and, when the same draw is extended by one more
/// member, nonincreasing in N. Checked both per action and at the level of
/// Z = gamma * max over actions, on every single draw.
void check_samplewise_monotone(Theorem1Report& report, long samples,
                               std::uint64_t seed) {
    constexpr int kMaxN = 10;
    Rng rng = Rng::stream(seed, 0x2000);
    ErrorDist dist; // Uniform(-1, 1)
    long violations_k = 0, violations_n = 0;

    // keep[a][n][k] = mean of the k smallest of the first n draws for
    // action a (1-based n, k); z[n][k] = gamma * max_a keep[a][n][k].
    double keep[kActions][kMaxN + 1][kMaxN + 1];
    double z[kMaxN + 1][kMaxN + 1];
    std::vector<std::vector<double>> sorted(kActions);
    for (auto& v : sorted) v.reserve(kMaxN);

    for (long s = 0; s < samples; ++s) {
        for (auto& v : sorted) v.clear();
        for (int n = 1; n <= kMaxN; ++n) {
            for (int a = 0; a < kActions; ++a) {
                const double e = dist.sample(rng);
                auto& v = sorted[a];
                v.insert(std::upper_bound(v.begin(), v.end(), e), e);
                double run = 0.0;
                for (int k = 1; k <= n; ++k) {
                    run += v[k - 1];
                    keep[a][n][k] = run / static_cast<double>(k);
                }
            }
            for (int k = 1; k <= n; ++k) {
                double best = keep[0][n][k];
                for (int a = 1; a < kActions; ++a)
                    best = std::max(best, keep[a][n][k]);
                z[n][k] = kGamma * best;
            }
        }
        for (int n = 1; n <= kMaxN; ++n)
            for (int k = 2; k <= n; ++k) {
                if (z[n][k - 1] > z[n][k]) ++violations_k;
                for (int a = 0; a < kActions; ++a)
                    if (keep[a][n][k - 1] > keep[a][n][k]) ++violations_k;
            }
        for (int k = 1; k <= kMaxN; ++k)
            for (int n = k; n < kMaxN; ++n) {
                if (z[n + 1][k] > z[n][k]) ++violations_n;
                for (int a = 0; a < kActions; ++a)
                    if (keep[a][n + 1][k] > keep[a][n][k]) ++violations_n;
            }
    }
    report.checks.push_back(make_check(
        "part2_samplewise_monotone_in_K",
        "violations of keepK-mean/Z nondecreasing in K over coupled draws",
        static_cast<double>(violations_k), 0.0, violations_k == 0));
    report.checks.push_back(make_check(
        "part3_samplewise_monotone_in_N",
        "violations of keepK-mean/Z nonincreasing in N over coupled draws",
        static_cast<double>(violations_n), 0.0, violations_n == 0));
}

/// Closed form: two actions, N=K=1, Uniform(-1,1): E[Z] = gamma * 1/3.
void check_closed_form(Theorem1Report& report, long samples,
                       std::uint64_t seed) {
    ZSampleConfig cfg;
    cfg.ensemble_size = 1;
    cfg.keep_k = 1;
    cfg.gamma = kGamma;
    cfg.num_actions = 2;
    Rng rng = Rng::stream(seed, 0x3000);
    const EZEstimate est = estimate_EZ(cfg, samples, rng);
    const double expected = kGamma / 3.0;
    const bool pass = std::abs(est.mean - expected) <= 0.01;
    report.checks.push_back(make_check(
        "closed_form_two_actions",
        "E[Z_{1,1}], |A|=2 vs gamma/3 = 0.33", est.mean, est.half_width_99,
        pass));
}

/// Part 4 with Lemma-1 limit: K=1, growing N, coupled through prefix
/// minima. Estimates must fall monotonically, turn negative by N=20 and
/// land within 0.02 of gamma * (-1) = -0.99 at N=1000.
void check_min_limit(Theorem1Report& report, long samples,
                     std::uint64_t seed) {
    const std::vector<int> ladder = {1, 2, 5, 20, 100, 1000};
    const int max_n = ladder.back();
    Rng rng = Rng::stream(seed, 0x4000);
    ErrorDist dist;

    std::vector<KahanSum> sums(ladder.size()), sums_sq(ladder.size());
    for (long s = 0; s < samples; ++s) {
        double mins[kActions];
        for (double& m : mins) m = std::numeric_limits<double>::infinity();
        std::size_t step = 0;
        for (int n = 1; n <= max_n; ++n) {
            for (int a = 0; a < kActions; ++a)
                mins[a] = std::min(mins[a], dist.sample(rng));
            if (n == ladder[step]) {
                const double z =
                    kGamma * *std::max_element(mins, mins + kActions);
                sums[step].add(z);
                sums_sq[step].add(z * z);
                ++step;
            }
        }
    }

    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    bool negative_from_20 = true;
    double est_1000 = 0.0, hw_1000 = 0.0;
    report.crossover_n = -1;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double mean = sums[i].sum / static_cast<double>(samples);
        const double hw = ci99_half_width(sums[i].sum, sums_sq[i].sum, samples);
        if (mean > prev) monotone = false;
        prev = mean;
        if (ladder[i] >= 20 && !(mean + hw < 0.0)) negative_from_20 = false;
        if (report.crossover_n < 0 && mean + hw < 0.0)
            report.crossover_n = ladder[i];
        if (ladder[i] == 1000) {
            est_1000 = mean;
            hw_1000 = hw;
        }
        report.checks.push_back(make_check(
            "part4_keep1_N" + std::to_string(ladder[i]),
            "E[Z_{1,N}] via coupled prefix minima", mean, hw, true));
    }
    report.checks.push_back(make_check(
        "part4_monotone_decreasing", "estimates fall with N on coupled draws",
        0.0, 0.0, monotone));
    report.checks.push_back(make_check(
        "part4_negative_from_N20", "mean + half-width < 0 for N >= 20", 0.0,
        0.0, negative_from_20));
    const bool limit_ok = std::abs(est_1000 - (-kGamma)) <= 0.02;
    report.checks.push_back(make_check(
        "part4_limit_N1000", "E[Z_{1,1000}] vs gamma * tau = -0.99", est_1000,
        hw_1000, limit_ok));
}

} // namespace

Theorem1Report theorem1_suite(std::uint64_t seed, long num_samples) {
    if (num_samples < 10000)
        throw std::invalid_argument(
            "theorem1_suite: need at least 1e4 samples");
    Theorem1Report report;
    report.seed = seed;
    report.samples_per_check = num_samples;
    check_part1(report, num_samples, seed);
    check_samplewise_monotone(report, num_samples, seed);
    check_closed_form(report, num_samples, seed);
    check_min_limit(report, num_samples, seed);
    report.all_pass = true;
    for (const TheoremCheck& c : report.checks)
        if (!c.pass) report.all_pass = false;
    return report;
}

std::string theorem1_report_json(const Theorem1Report& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["samples_per_check"] = report.samples_per_check;
    j["all_pass"] = report.all_pass;
    j["crossover_N"] = report.crossover_n;
    j["checks"] = nlohmann::ordered_json::array();
    for (const TheoremCheck& c : report.checks) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        jc["detail"] = c.detail;
        jc["estimate"] = c.estimate;
        jc["ci99_half_width"] = c.half_width;
        jc["verdict"] = c.pass ? "pass" : "fail";
        j["checks"].push_back(jc);
    }
    return j.dump(2);
}

} // namespace aqe
