#include "cmflow/psi.hpp"

#include "cmflow/convex_calculus.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace cmflow {

namespace {

double parse_number(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("psi parameter '" + key + "': not a number: '" + text + "'");
    }
    if (pos != text.size() || !std::isfinite(v)) throw std::invalid_argument("psi parameter '" + key + "': not a number: '" + text + "'");
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (v != std::floor(v)) throw std::invalid_argument("psi parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
}

// Shortest text that reads back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

std::string to_string(PsiFamily f) {
    switch (f) {
        case PsiFamily::Constant: return "Constant";
        case PsiFamily::EvenHarmonic: return "EvenHarmonic";
        case PsiFamily::PowerOfBase: return "PowerOfBase";
    }
    return "?";
}

PsiFamily parse_psi_family(const std::string& name) {
    if (name == "Constant") return PsiFamily::Constant;
    if (name == "EvenHarmonic") return PsiFamily::EvenHarmonic;
    if (name == "PowerOfBase") return PsiFamily::PowerOfBase;
    throw std::invalid_argument("unknown psi family '" + name + "'");
}

PsiSpec PsiSpec::constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument("Constant psi must be positive");
    PsiSpec s;
    s.family_ = PsiFamily::Constant;
    s.scale_ = value;
    return s;
}

PsiSpec PsiSpec::even_harmonic(double epsilon, int degree, double scale) {
    if (degree < 0 || degree % 2 != 0) throw std::invalid_argument("EvenHarmonic psi needs an even harmonic degree, got " + std::to_string(degree));
    if (!(scale > 0.0)) throw std::invalid_argument("psi scale must be positive");
    PsiSpec s;
    s.family_ = PsiFamily::EvenHarmonic;
    s.epsilon_ = epsilon;
    s.degree_ = degree;
    s.scale_ = scale;
    s.certify();
    return s;
}

PsiSpec PsiSpec::power_of_base(double epsilon, int degree, double exponent, double scale) {
    if (degree < 0) throw std::invalid_argument("PowerOfBase psi needs a nonnegative degree");
    if (!(scale > 0.0)) throw std::invalid_argument("psi scale must be positive");
    if (!std::isfinite(exponent)) throw std::invalid_argument("PowerOfBase exponent must be finite");
    PsiSpec s;
    s.family_ = PsiFamily::PowerOfBase;
    s.epsilon_ = epsilon;
    s.degree_ = degree;
    s.exponent_ = exponent;
    s.scale_ = scale;
    s.certify();
    return s;
}

PsiSpec PsiSpec::parse(const std::string& family, const std::string& params) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> items;
    boost::split(items, params, boost::is_any_of(";,"), boost::token_compress_on);
    for (auto item : items) {
        boost::trim(item);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("psi parameter '" + item + "' is not key=value");
        std::string key = boost::trim_copy(item.substr(0, eq));
        std::string val = boost::trim_copy(item.substr(eq + 1));
        if (!kv.emplace(key, val).second) throw std::invalid_argument("psi parameter '" + key + "' given twice");
    }
    auto take = [&](const std::string& key, double fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        const double v = parse_number(key, it->second);
        kv.erase(it);
        return v;
    };
    auto take_int = [&](const std::string& key, int fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        const int v = parse_int(key, it->second);
        kv.erase(it);
        return v;
    };

    PsiSpec spec;
    switch (parse_psi_family(family)) {
        case PsiFamily::Constant: {
            double value = take("value", 1.0);
            value = take("scale", value);
            spec = constant(value);
            break;
        }
        case PsiFamily::EvenHarmonic: {
            const double eps = take("epsilon", 0.0);
            const int deg = take_int("degree", 2);
            spec = even_harmonic(eps, deg, take("scale", 1.0));
            break;
        }
        case PsiFamily::PowerOfBase: {
            const double eps = take("epsilon", 0.0);
            const int deg = take_int("degree", 2);
            const double ex = take("exponent", 1.0);
            spec = power_of_base(eps, deg, ex, take("scale", 1.0));
            break;
        }
    }
    if (!kv.empty()) throw std::invalid_argument("unknown psi parameter '" + kv.begin()->first + "' for family " + family);
    return spec;
}

double PsiSpec::operator()(double theta) const {
    switch (family_) {
        case PsiFamily::Constant: return scale_;
        case PsiFamily::EvenHarmonic: return scale_ * (1.0 + epsilon_ * boost::math::legendre_p(degree_, std::cos(theta)));
        case PsiFamily::PowerOfBase:
            return scale_ * std::pow(1.0 + epsilon_ * boost::math::legendre_p(degree_, std::cos(theta)), exponent_);
    }
    return 0.0;
}

std::string PsiSpec::params_text() const {
    switch (family_) {
        case PsiFamily::Constant: return "value=" + shortest(scale_);
        case PsiFamily::EvenHarmonic:
            return "epsilon=" + shortest(epsilon_) + "; degree=" + std::to_string(degree_) + "; scale=" + shortest(scale_);
        case PsiFamily::PowerOfBase:
            return "epsilon=" + shortest(epsilon_) + "; degree=" + std::to_string(degree_) + "; exponent=" + shortest(exponent_) +
                   "; scale=" + shortest(scale_);
    }
    return {};
}

void PsiSpec::certify() const {
    constexpr int kScan = 4001;
    for (int i = 0; i < kScan; ++i) {
        const double theta = std::numbers::pi * i / (kScan - 1);
        if (family_ == PsiFamily::PowerOfBase) {
            const double base = 1.0 + epsilon_ * boost::math::legendre_p(degree_, std::cos(theta));
            if (!(base > 0.0)) throw std::invalid_argument("PowerOfBase psi: base is not positive at theta = " + std::to_string(theta));
        }
        const double v = (*this)(theta);
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("psi is not strictly positive at theta = " + std::to_string(theta));
    }
}

SupportField eval_psi(const PsiSpec& spec, const GridPtr& grid) {
    SupportField f = sample(grid, [&](double theta, double) { return spec(theta); });
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0)) throw std::domain_error("eval_psi: nonpositive sample at node " + std::to_string(i));
    return f;
}

SupportField load_sampled_psi(const GridPtr& grid, const std::string& path) {
    SupportField f = load_field(grid, path);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0)) throw std::domain_error(path + ": psi sample " + std::to_string(i) + " is not positive");
    return f;
}

double check_even(const SupportField& psi) { return antipodal_defect(psi); }

AdmissibilityReport check_admissible(const SupportField& psi, int k, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("check_admissible: alpha must be positive");
    if (k < 1 || k > psi.grid().n_dim()) throw std::invalid_argument("check_admissible: k out of range");
    for (std::size_t i = 0; i < psi.size(); ++i)
        if (!(psi[i] > 0.0)) throw std::domain_error("check_admissible: psi is not positive at node " + std::to_string(i));

    AdmissibilityReport r;
    r.p = 1.0 + 1.0 / alpha;
    r.alpha_in_theorem_range = alpha * k > 1.0;

    const double e_psi = 1.0 / (1.0 + k * alpha);
    const double e_tilde = -1.0 / (k + r.p - 1.0);
    std::vector<double> f(psi.size()), g(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        f[i] = std::pow(psi[i], e_psi);
        g[i] = std::pow(std::pow(psi[i], -1.0 / alpha), e_tilde);
    }
    r.min_eigenvalue = min_radius(SupportField(psi.grid_ptr(), std::move(f)));
    r.min_eigenvalue_tilde = min_radius(SupportField(psi.grid_ptr(), std::move(g)));
    r.admissible = r.min_eigenvalue > kAdmissibilityMargin;
    r.forms_agree = r.admissible == (r.min_eigenvalue_tilde > kAdmissibilityMargin);
    return r;
}

}  // namespace cmflow
