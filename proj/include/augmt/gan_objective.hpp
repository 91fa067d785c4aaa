#pragma once

#include <augmt/error.hpp>
#include <augmt/random.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace augmt::gan {

/// Logs of discriminator outputs are taken on values clamped to [eps, 1 - eps].
inline constexpr double kClampEpsilon = 1e-12;
inline constexpr double kDefaultAdversarialWeight = 0.1;

/// ln 4, the value of the game at equilibrium.
inline const double kLn4 = std::log(4.0);

/// Probabilities over a finite ordered outcome set. Outcomes may carry labels; two
/// distributions share a support when their sizes and labels agree.
struct DiscreteDistribution {
    std::vector<double> probs;
    std::vector<std::string> labels;

    std::size_t size() const noexcept { return probs.size(); }

    void validate() const {
        if (probs.empty())
            throw DataError("distribution has an empty support");
        if (!labels.empty() && labels.size() != probs.size())
            throw DataError("distribution has " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(probs.size()) + " outcomes");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw DataError("probabilities must be finite and non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw DataError("probabilities sum to " + std::to_string(sum) + ", not 1");
    }
};

/// Discriminator output per outcome, strictly inside (0, 1).
struct DiscriminatorTable {
    std::vector<double> values;

    void validate() const {
        for (double v : values)
            if (!(v > 0.0 && v < 1.0))
                throw DataError("discriminator outputs must lie strictly inside (0, 1)");
    }
};

struct LossWeights {
    double lambda_adv = kDefaultAdversarialWeight;

    void validate() const {
        if (!(lambda_adv > 0.0 && lambda_adv <= 1.0))
            throw ValidationError("adversarial weight must lie in (0, 1]");
    }
};

namespace detail {
inline void same_support(const DiscreteDistribution &p, const DiscreteDistribution &q) {
    p.validate();
    q.validate();
    if (p.size() != q.size())
        throw DataError("support mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + " outcomes");
    if (!p.labels.empty() && !q.labels.empty() && p.labels != q.labels)
        throw DataError("support mismatch: outcome labels differ");
}

inline void check_open_unit(std::span<const double> xs, const char *what) {
    if (xs.empty())
        throw ValidationError(std::string(what) + " must not be empty");
    for (double x : xs)
        if (!(x > 0.0 && x < 1.0))
            throw DataError(std::string(what) + " must lie strictly inside (0, 1)");
}

inline double mean_neg_log(std::span<const double> xs, bool complement) {
    double sum = 0.0;
    for (double x : xs)
        sum += -std::log(complement ? 1.0 - x : x);
    return sum / static_cast<double>(xs.size());
}
} // namespace detail

/// E_{p_data}[ln D] + E_{p_g}[ln(1 - D)].
inline double gan_value(const DiscreteDistribution &p_data, const DiscreteDistribution &p_g, const DiscriminatorTable &d) {
    detail::same_support(p_data, p_g);
    d.validate();
    if (d.values.size() != p_data.size())
        throw DataError("discriminator covers " + std::to_string(d.values.size()) + " outcomes, support has " +
                        std::to_string(p_data.size()));
    double v = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (p_data.probs[i] > 0.0)
            v += p_data.probs[i] * std::log(d.values[i]);
        if (p_g.probs[i] > 0.0)
            v += p_g.probs[i] * std::log(1.0 - d.values[i]);
    }
    return v;
}

/// p_data / (p_data + p_g), clamped to [eps, 1 - eps].
inline DiscriminatorTable optimal_discriminator(const DiscreteDistribution &p_data, const DiscreteDistribution &p_g) {
    detail::same_support(p_data, p_g);
    DiscriminatorTable d;
    d.values.reserve(p_data.size());
    for (std::size_t i = 0; i < p_data.size(); ++i) {
        const double denom = p_data.probs[i] + p_g.probs[i];
        if (denom <= 0.0)
            throw DataError("outcome " + std::to_string(i) + " has zero probability under both distributions");
        d.values.push_back(std::clamp(p_data.probs[i] / denom, kClampEpsilon, 1.0 - kClampEpsilon));
    }
    return d;
}

/// Jensen-Shannon divergence in nats, within [0, ln 2].
inline double jsd(const DiscreteDistribution &p, const DiscreteDistribution &q) {
    detail::same_support(p, q);
    double v = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p.probs[i] + q.probs[i]);
        if (p.probs[i] > 0.0)
            v += 0.5 * p.probs[i] * std::log(p.probs[i] / m);
        if (q.probs[i] > 0.0)
            v += 0.5 * q.probs[i] * std::log(q.probs[i] / m);
    }
    return std::max(0.0, v);
}

/// Binary cross-entropy of the discriminator: fake outputs against label 0, true outputs
/// against label 1, each averaged and added with equal weight.
inline double discriminator_loss(std::span<const double> fake_outputs, std::span<const double> true_outputs) {
    detail::check_open_unit(fake_outputs, "fake outputs");
    detail::check_open_unit(true_outputs, "true outputs");
    return detail::mean_neg_log(fake_outputs, true) + detail::mean_neg_log(true_outputs, false);
}

/// Translation loss plus the weighted cross-entropy of discriminator outputs against label 1.
inline double generator_combined_loss(double translation_loss, std::span<const double> adv_outputs,
                                      const LossWeights &w = {}) {
    if (!(translation_loss >= 0.0))
        throw ValidationError("translation loss must be non-negative");
    w.validate();
    detail::check_open_unit(adv_outputs, "adversarial outputs");
    return translation_loss + w.lambda_adv * detail::mean_neg_log(adv_outputs, false);
}

enum class Label { real, fake };
enum class RecordSource { bilingual, monolingual_synthetic };

struct LabeledRecord {
    std::string text;
    Label label = Label::real;
    RecordSource source = RecordSource::bilingual;
};

/// Bilingual targets labeled true, synthetic translations labeled fake. Without a seed the
/// bilingual records come first; with one, the combined stream is shuffled.
inline std::vector<LabeledRecord> label_batches(std::span<const std::string> bilingual_targets,
                                                std::span<const std::string> synthetic_translations,
                                                std::optional<std::uint64_t> seed = {}) {
    std::vector<LabeledRecord> out;
    out.reserve(bilingual_targets.size() + synthetic_translations.size());
    for (const auto &t : bilingual_targets)
        out.push_back({t, Label::real, RecordSource::bilingual});
    for (const auto &t : synthetic_translations)
        out.push_back({t, Label::fake, RecordSource::monolingual_synthetic});
    if (seed) {
        Engine eng(*seed);
        shuffle(std::span<LabeledRecord>(out), eng);
    }
    return out;
}

inline nlohmann::json to_json(const LabeledRecord &r) {
    return {{"text", r.text},
            {"label", r.label == Label::real ? "true" : "fake"},
            {"source", r.source == RecordSource::bilingual ? "bilingual" : "monolingual-synthetic"}};
}

inline DiscreteDistribution distribution_from_json(const nlohmann::json &j) {
    DiscreteDistribution d;
    try {
        if (j.is_array()) {
            d.probs = j.get<std::vector<double>>();
        } else {
            d.probs = j.at("probs").get<std::vector<double>>();
            if (j.contains("support"))
                d.labels = j["support"].get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("malformed distribution: ") + e.what());
    }
    d.validate();
    return d;
}

} // namespace augmt::gan
