#include "wsamp/delay_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wsamp {

DelayModel DelayModel::degenerate(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("degenerate delay must be >= 0");
    return DelayModel(Degenerate{value});
}

DelayModel DelayModel::exponential(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be > 0");
    return DelayModel(Exponential{mean});
}

DelayModel DelayModel::lognormal_normalized(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal sigma must be > 0");
    return DelayModel(LogNormalNormalized{sigma});
}

DelayModel DelayModel::scaled(DelayModel inner, double factor) {
    if (!(factor >= 0.0)) throw std::invalid_argument("scale factor must be >= 0");
    return DelayModel(Scaled{std::make_shared<const DelayModel>(std::move(inner)), factor});
}

DelayModel DelayModel::empirical(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical sample set must be nonempty");
    for (double s : samples)
        if (!(s >= 0.0)) throw std::invalid_argument("empirical samples must be >= 0");
    return DelayModel(Empirical{std::move(samples)});
}

double DelayModel::mean() const {
    return std::visit(
        [](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return k.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return k.mean;
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return k.factor * k.inner->mean();
            } else {
                double sum = 0.0;
                for (double s : k.samples) sum += s;
                return sum / static_cast<double>(k.samples.size());
            }
        },
        kind_);
}

double DelayModel::second_moment() const {
    return std::visit(
        [](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return k.value * k.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return 2.0 * k.mean * k.mean;
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                // E[e^{2 sigma X}] / E[e^{sigma X}]^2 = e^{sigma^2}
                return std::exp(k.sigma * k.sigma);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return k.factor * k.factor * k.inner->second_moment();
            } else {
                double sum = 0.0;
                for (double s : k.samples) sum += s * s;
                return sum / static_cast<double>(k.samples.size());
            }
        },
        kind_);
}

double DelayModel::ess_inf() const {
    return std::visit(
        [](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return k.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return k.factor * k.inner->ess_inf();
            } else {
                return *std::min_element(k.samples.begin(), k.samples.end());
            }
        },
        kind_);
}

double DelayModel::sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return k.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return rng.exponential(k.mean);
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                return std::exp(k.sigma * rng.normal() - 0.5 * k.sigma * k.sigma);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return k.factor * k.inner->sample(rng);
            } else {
                const auto n = k.samples.size();
                return k.samples[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))];
            }
        },
        kind_);
}

bool DelayModel::almost_surely_zero() const {
    return std::visit(
        [](const auto& k) -> bool {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return k.value == 0.0;
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return k.factor == 0.0 || k.inner->almost_surely_zero();
            } else if constexpr (std::is_same_v<T, Empirical>) {
                return std::all_of(k.samples.begin(), k.samples.end(),
                                   [](double s) { return s == 0.0; });
            } else {
                return false;
            }
        },
        kind_);
}

namespace {

std::string format_param(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

std::string DelayModel::describe() const {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return "det:" + format_param(k.value);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return "exp:" + format_param(k.mean);
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                return "lognorm:" + format_param(k.sigma);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                return "scaled:" + format_param(k.factor) + ":" + k.inner->describe();
            } else {
                return "empirical(n=" + std::to_string(k.samples.size()) + ")";
            }
        },
        kind_);
}

DelayModel load_empirical(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open delay file: " + path);

    std::vector<double> samples;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(path + ": parse error at line " + std::to_string(line_no));
        }
        while (used < line.size() && (line[used] == ' ' || line[used] == '\t')) ++used;
        if (used != line.size())
            throw std::invalid_argument(path + ": parse error at line " + std::to_string(line_no));
        if (!(v >= 0.0))
            throw std::invalid_argument(path + ": negative value at line " + std::to_string(line_no));
        samples.push_back(v);
    }
    if (samples.empty()) throw std::invalid_argument(path + ": no samples in file");
    return DelayModel::empirical(std::move(samples));
}

DelayModel parse_delay_model(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("bad delay spec '" + text +
                                    "' (want det:y | exp:mean | lognorm:sigma | scaled:d:inner | file:path)");
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);

    auto parse_number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number '" + s + "' in delay spec '" + text + "'");
        }
        if (used != s.size())
            throw std::invalid_argument("bad number '" + s + "' in delay spec '" + text + "'");
        return v;
    };

    if (head == "det") return DelayModel::degenerate(parse_number(rest));
    if (head == "exp") return DelayModel::exponential(parse_number(rest));
    if (head == "lognorm") return DelayModel::lognormal_normalized(parse_number(rest));
    if (head == "file") return load_empirical(rest);
    if (head == "scaled") {
        const auto inner_sep = rest.find(':');
        if (inner_sep == std::string::npos)
            throw std::invalid_argument("scaled spec needs scaled:d:inner, got '" + text + "'");
        const double factor = parse_number(rest.substr(0, inner_sep));
        return DelayModel::scaled(parse_delay_model(rest.substr(inner_sep + 1)), factor);
    }
    throw std::invalid_argument("unknown delay kind '" + head + "' in '" + text + "'");
}

}  // namespace wsamp
