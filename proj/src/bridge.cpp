#include "warpbridge/bridge.hpp"

#include <cmath>
#include <limits>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"

namespace warpbridge {

namespace {

constexpr double kPosInf = std::numeric_limits<double>::infinity();

void check_vector(const std::vector<double>& v, const char* name) {
    bool any_finite = false;
    for (double x : v) {
        if (std::isnan(x) || x == kPosInf)
            fail(ErrorCode::Numeric, std::string("bridge input ") + name + " contains NaN or +inf");
        any_finite |= std::isfinite(x);
    }
    if (!any_finite) fail(ErrorCode::Numeric, std::string("bridge input ") + name + " has no finite entry");
}

/// log l = log q1 - log q2 with the -inf cases resolved; NaN when both are -inf.
double log_ratio(double lq1, double lq2) {
    if (lq1 == kNegInf && lq2 == kNegInf) return std::numeric_limits<double>::quiet_NaN();
    if (lq2 == kNegInf) return kPosInf;
    return lq1 - lq2;
}

} // namespace

void BridgeInput::validate() const {
    require(log_q1_at_1.size() == log_q2_at_1.size(), "BridgeInput: sample-1 vectors differ in length");
    require(log_q1_at_2.size() == log_q2_at_2.size(), "BridgeInput: sample-2 vectors differ in length");
    require(n1() >= 1 && n2() >= 1, "BridgeInput: both samples must be nonempty");
    check_vector(log_q1_at_1, "log_q1_at_1");
    check_vector(log_q2_at_1, "log_q2_at_1");
    check_vector(log_q1_at_2, "log_q1_at_2");
    check_vector(log_q2_at_2, "log_q2_at_2");
}

BridgeInput BridgeInput::swapped() const { return {log_q2_at_2, log_q1_at_2, log_q2_at_1, log_q1_at_1}; }

BridgeInput BridgeInput::subset(std::span<const std::size_t> idx1, std::span<const std::size_t> idx2) const {
    BridgeInput out;
    for (std::size_t i : idx1) {
        out.log_q1_at_1.push_back(log_q1_at_1.at(i));
        out.log_q2_at_1.push_back(log_q2_at_1.at(i));
    }
    for (std::size_t j : idx2) {
        out.log_q1_at_2.push_back(log_q1_at_2.at(j));
        out.log_q2_at_2.push_back(log_q2_at_2.at(j));
    }
    return out;
}

double bridge_general(const BridgeInput& input, std::span<const double> log_alpha_at_1,
                      std::span<const double> log_alpha_at_2) {
    input.validate();
    require(log_alpha_at_1.size() == input.n1() && log_alpha_at_2.size() == input.n2(),
            "bridge_general: alpha vectors must match the sample sizes");
    auto terms = [](const std::vector<double>& lq, std::span<const double> la) {
        std::vector<double> t(lq.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = lq[i] == kNegInf ? kNegInf : lq[i] + la[i];
            if (std::isnan(t[i])) fail(ErrorCode::Numeric, "bridge_general: alpha is not finite where q is");
        }
        return t;
    };
    const double num = log_mean_exp(terms(input.log_q1_at_2, log_alpha_at_2));
    const double den = log_mean_exp(terms(input.log_q2_at_1, log_alpha_at_1));
    if (num == kNegInf || den == kNegInf)
        fail(ErrorCode::Numeric, "bridge_general: no overlap on sampled support");
    return num - den;
}

BridgeResult bridge_optimal(const BridgeInput& input, const BridgeOptions& opts) {
    input.validate();
    require(opts.r0 > 0.0 && std::isfinite(opts.r0), "bridge_optimal: r0 must be positive");
    require(opts.tol > 0.0, "bridge_optimal: tol must be positive");
    const double n1 = static_cast<double>(input.n1()), n2 = static_cast<double>(input.n2());
    const double log_s1 = std::log(n1 / (n1 + n2)), log_s2 = std::log(n2 / (n1 + n2));

    BridgeResult res;
    std::vector<double> l1(input.n1()), l2(input.n2());
    for (std::size_t j = 0; j < l1.size(); ++j) {
        l1[j] = log_ratio(input.log_q1_at_1[j], input.log_q2_at_1[j]);
        res.zero_density_draws += std::isnan(l1[j]);
    }
    for (std::size_t j = 0; j < l2.size(); ++j) {
        l2[j] = log_ratio(input.log_q1_at_2[j], input.log_q2_at_2[j]);
        res.zero_density_draws += std::isnan(l2[j]);
    }

    // Sample-2 terms l / (s1 l + s2 r) and sample-1 terms 1 / (s1 l + s2 r), on the log scale.
    std::vector<double> num(l2.size()), den(l1.size());
    double log_r = std::log(opts.r0);
    res.trace.push_back(log_r);
    for (std::size_t t = 1; t <= opts.max_iters; ++t) {
        const double shift = log_s2 + log_r;
        for (std::size_t j = 0; j < l2.size(); ++j) {
            const double l = l2[j];
            if (std::isnan(l)) num[j] = kNegInf;
            else if (l == kPosInf) num[j] = -log_s1;
            else num[j] = l - log_add_exp(log_s1 + l, shift);
        }
        for (std::size_t j = 0; j < l1.size(); ++j) {
            const double l = l1[j];
            if (std::isnan(l) || l == kPosInf) den[j] = kNegInf;
            else den[j] = -log_add_exp(log_s1 + l, shift);
        }
        const double lnum = log_mean_exp(num), lden = log_mean_exp(den);
        if (lnum == kNegInf || lden == kNegInf)
            fail(ErrorCode::Numeric, "bridge_optimal: no overlap on sampled support");
        const double next = lnum - lden;
        res.trace.push_back(next);
        res.iterations = t;
        const double step = std::abs(std::expm1(next - log_r));
        log_r = next;
        if (step < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.lambda_hat = log_r;
    return res;
}

double subset_variance(std::span<const double> half1, std::span<const double> half2) {
    require(half1.size() == half2.size(), "subset_variance: halves must have the same number of subsets");
    const std::size_t S = half1.size();
    require(S >= 2, "subset_variance: need S >= 2 subsets");
    double acc = 0.0;
    for (auto half : {half1, half2}) {
        double mean = 0.0;
        for (double v : half) mean += v;
        mean /= static_cast<double>(S);
        for (double v : half) acc += (v - mean) * (v - mean);
    }
    return acc / (4.0 * static_cast<double>(S) * static_cast<double>(S - 1));
}

double asymptotic_variance(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2, BridgeAlpha alpha,
                           const QuadratureOptions& opts) {
    require_dim(p2.dim, p1.dim, "asymptotic_variance");
    require(n1 >= 1 && n2 >= 1, "asymptotic_variance: sample sizes must be positive");
    const double n = static_cast<double>(n1 + n2);
    const double s1 = static_cast<double>(n1) / n, s2 = static_cast<double>(n2) / n;
    const double ls1 = std::log(s1), ls2 = std::log(s2);
    const Box box = opts.box ? *opts.box : p1.box.hull(p2.box);

    // V = int p1* p2* (p1* + p2*) alpha^2 / (int p1* p2* alpha)^2 - 1/s1 - 1/s2, p_i* = s_i p_i.
    auto log_alpha = [&](double l1, double l2) {
        switch (alpha) {
        case BridgeAlpha::Optimal: return -log_add_exp(ls1 + l1, ls2 + l2);
        case BridgeAlpha::Geometric: return -0.5 * (l1 + l2);
        case BridgeAlpha::Importance: return -l2;
        }
        return 0.0;
    };
    auto integral = [&](bool squared) {
        return quadrature_integral(
            p1.dim,
            [&](std::span<const double> x) {
                const double l1 = p1.log_pdf(x), l2 = p2.log_pdf(x);
                if (l1 == kNegInf || l2 == kNegInf) return kNegInf;
                const double base = ls1 + l1 + ls2 + l2;
                if (!squared) return base + log_alpha(l1, l2);
                return base + log_add_exp(ls1 + l1, ls2 + l2) + 2.0 * log_alpha(l1, l2);
            },
            box, opts.nodes);
    };
    const double top = integral(true), bottom = integral(false);
    require(bottom > 0.0, "asymptotic_variance: densities do not overlap on the quadrature grid");
    const double V = top / (bottom * bottom) - 1.0 / s1 - 1.0 / s2;
    return V / n;
}

double optimal_variance_harmonic(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2,
                                 const QuadratureOptions& opts) {
    const double s1 = static_cast<double>(n1) / static_cast<double>(n1 + n2);
    const double ha = divergence_table(p1, p2, s1, opts).harmonic;
    return (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)) * (1.0 / (1.0 - ha) - 1.0);
}

double geometric_variance_hellinger(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2,
                                    const QuadratureOptions& opts) {
    const double n = static_cast<double>(n1 + n2);
    const double s1 = static_cast<double>(n1) / n, s2 = static_cast<double>(n2) / n;
    const Box box = opts.box ? *opts.box : p1.box.hull(p2.box);
    const double he = divergence_table(p1, p2, s1, opts).hellinger;
    const double b = quadrature_integral(
        p1.dim,
        [&](std::span<const double> x) {
            const double l1 = p1.log_pdf(x), l2 = p2.log_pdf(x);
            if (l1 == kNegInf || l2 == kNegInf) return kNegInf;
            return log_add_exp(std::log(s1) + l1, std::log(s2) + l2);
        },
        box, opts.nodes);
    const double one_minus = 1.0 - he * he;
    return (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)) * (b / (one_minus * one_minus) - 1.0);
}

double plug_in_variance(const BridgeInput& input, double lambda_hat) {
    input.validate();
    const double n1 = static_cast<double>(input.n1()), n2 = static_cast<double>(input.n2());
    const double s1 = n1 / (n1 + n2), s2 = n2 / (n1 + n2);
    // Relative variances of f2 = l/(s1 l + s2 r) under p2 and f1 = 1/(s1 l + s2 r) under p1.
    auto rel_var = [&](const std::vector<double>& lq1, const std::vector<double>& lq2, bool numerator) {
        double mean = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < lq1.size(); ++j) {
            const double l = log_ratio(lq1[j], lq2[j]);
            double f = 0.0;
            if (!std::isnan(l)) {
                if (l == kPosInf) f = numerator ? 1.0 / s1 : 0.0;
                else {
                    const double lden = log_add_exp(std::log(s1) + l, std::log(s2) + lambda_hat);
                    f = std::exp((numerator ? l : 0.0) - lden);
                }
            }
            const double delta = f - mean;
            mean += delta / static_cast<double>(j + 1);
            m2 += delta * (f - mean);
        }
        const double var = m2 / static_cast<double>(lq1.size());
        return var / (mean * mean) / static_cast<double>(lq1.size());
    };
    return rel_var(input.log_q1_at_2, input.log_q2_at_2, true) + rel_var(input.log_q1_at_1, input.log_q2_at_1, false);
}

} // namespace warpbridge
