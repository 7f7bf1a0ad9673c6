#pragma once

#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/lexicon.hpp"
#include "mlid/morpheme.hpp"
#include "mlid/ngram.hpp"
#include "mlid/verdict.hpp"

namespace mlid {

// Anything that can score a morpheme sequence works as a language model
// here; the n-gram model is one implementation.
template <typename S>
concept SequenceScorer = requires(const S& s, const MorphemeSequence& seq) {
    { s.log_prob(seq) } -> std::convertible_to<double>;
};

// Log scores of one utterance translated toward each language of the pair.
struct ScorePair {
    std::string id;
    double lp1 = 0.0;
    double lp2 = 0.0;
    int oov1 = 0;
    int oov2 = 0;

    double difference() const { return lp1 - lp2; }
};

enum class Normalization : std::uint8_t { Total, PerMorpheme };

inline std::string to_string(Normalization n) {
    return n == Normalization::Total ? "total" : "per-morpheme";
}

inline Normalization normalization_from_string(std::string_view s) {
    if (s == "total") return Normalization::Total;
    if (s == "per-morpheme" || s == "per_morpheme") return Normalization::PerMorpheme;
    throw input_error("unknown normalization: " + std::string(s));
}

struct AlphaEstimate {
    double log_alpha = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    Normalization normalization = Normalization::Total;
};

// Translates the utterance toward each language, tokenizes with that
// language's scheme and scores with that language's model.
template <SequenceScorer S1, SequenceScorer S2>
ScorePair score_utterance(const Utterance& u, const TranslationLexicon& lex, const S1& lm1,
                          const S2& lm2, const MorphemeTokenizer& tok1,
                          const MorphemeTokenizer& tok2) {
    ScorePair sp;
    sp.id = u.id;
    TranslationResult toward1 = translate_word_by_word(u, lex.pair.l1, lex);
    TranslationResult toward2 = translate_word_by_word(u, lex.pair.l2, lex);
    sp.lp1 = lm1.log_prob(tok1.tokenize(toward1.tokens));
    sp.lp2 = lm2.log_prob(tok2.tokenize(toward2.tokens));
    sp.oov1 = toward1.oov_count;
    sp.oov2 = toward2.oov_count;
    return sp;
}

// The thresholded decision: L1 iff the log-score difference clears log_alpha
// (boundary inclusive). Never undetermined.
inline MLVerdict decide(const ScorePair& score, double log_alpha) {
    MLVerdict v;
    v.principle = Principle::P12;
    v.label = score.difference() >= log_alpha ? MlLabel::L1 : MlLabel::L2;
    return v;
}

// log_alpha from precomputed per-utterance (log_prob, morpheme count) pairs.
inline AlphaEstimate estimate_alpha_from_scores(
    const std::vector<std::pair<double, std::size_t>>& side1,
    const std::vector<std::pair<double, std::size_t>>& side2, Normalization normalization) {
    if (side1.empty() || side2.empty())
        throw compute_error("alpha estimation needs monolingual utterances on both sides");
    auto mean = [&](const std::vector<std::pair<double, std::size_t>>& side) {
        double sum = 0.0;
        for (const auto& [lp, count] : side) {
            if (normalization == Normalization::PerMorpheme) {
                if (count == 0) throw compute_error("cannot length-normalize an empty utterance");
                sum += lp / static_cast<double>(count);
            } else {
                sum += lp;
            }
        }
        return sum / static_cast<double>(side.size());
    };
    AlphaEstimate est;
    est.log_alpha = mean(side1) - mean(side2);
    est.n1 = side1.size();
    est.n2 = side2.size();
    est.normalization = normalization;
    return est;
}

// Expectation difference of monolingual log scores, each side scored by its
// own model on raw (untranslated) utterances.
template <SequenceScorer S1, SequenceScorer S2>
AlphaEstimate estimate_alpha(const std::vector<Utterance>& mono1,
                             const std::vector<Utterance>& mono2, const S1& lm1, const S2& lm2,
                             const MorphemeTokenizer& tok1, const MorphemeTokenizer& tok2,
                             Normalization normalization = Normalization::Total) {
    std::vector<std::pair<double, std::size_t>> side1, side2;
    for (const Utterance& u : mono1) {
        MorphemeSequence seq = tok1.tokenize(u.tokens);
        side1.emplace_back(lm1.log_prob(seq), seq.size());
    }
    for (const Utterance& u : mono2) {
        MorphemeSequence seq = tok2.tokenize(u.tokens);
        side2.emplace_back(lm2.log_prob(seq), seq.size());
    }
    return estimate_alpha_from_scores(side1, side2, normalization);
}

struct DetPoint {
    double log_alpha;
    double fpr;  // true L2 decided L1
    double fnr;  // true L1 decided L2
};

// Error tradeoff across thresholds: one point per distinct score difference
// plus -inf/+inf sentinels, in increasing threshold order.
inline std::vector<DetPoint> det_curve(const std::vector<ScorePair>& scores,
                                       const std::vector<MlLabel>& reference) {
    if (scores.size() != reference.size())
        throw input_error("det_curve: scores and reference labels differ in length");
    std::size_t n1 = 0, n2 = 0;
    for (MlLabel label : reference) {
        if (label == MlLabel::L1) ++n1;
        else if (label == MlLabel::L2) ++n2;
        else throw input_error("det_curve: reference labels must be L1 or L2");
    }
    if (n1 == 0 || n2 == 0)
        throw compute_error("det_curve needs both classes in the reference labels");

    std::set<double> distinct;
    for (const ScorePair& s : scores) distinct.insert(s.difference());
    std::vector<double> thresholds;
    thresholds.push_back(-std::numeric_limits<double>::infinity());
    thresholds.insert(thresholds.end(), distinct.begin(), distinct.end());
    thresholds.push_back(std::numeric_limits<double>::infinity());

    std::vector<DetPoint> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            bool decided_l1 = scores[i].difference() >= t;
            if (decided_l1 && reference[i] == MlLabel::L2) ++fp;
            if (!decided_l1 && reference[i] == MlLabel::L1) ++fn;
        }
        curve.push_back({t, static_cast<double>(fp) / static_cast<double>(n2),
                         static_cast<double>(fn) / static_cast<double>(n1)});
    }
    return curve;
}

inline void save_scores_csv(const std::vector<ScorePair>& scores, std::ostream& out) {
    out << "id,lp1,lp2,oov1,oov2\n";
    for (const ScorePair& s : scores)
        out << csv_escape(s.id) << "," << fmt_double(s.lp1) << "," << fmt_double(s.lp2) << ","
            << s.oov1 << "," << s.oov2 << "\n";
}

inline std::vector<ScorePair> load_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open scores file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "id,lp1,lp2,oov1,oov2")
        throw input_error("scores file missing id,lp1,lp2,oov1,oov2 header: " + path.string());
    std::vector<ScorePair> scores;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != 5)
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected 5 columns");
        ScorePair s;
        s.id = std::string(cols[0]);
        try {
            s.lp1 = std::stod(std::string(cols[1]));
            s.lp2 = std::stod(std::string(cols[2]));
            s.oov1 = std::stoi(std::string(cols[3]));
            s.oov2 = std::stoi(std::string(cols[4]));
        } catch (const std::exception&) {
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": malformed numeric field");
        }
        scores.push_back(std::move(s));
    }
    return scores;
}

inline void save_det_csv(const std::vector<DetPoint>& curve, std::ostream& out) {
    out << "log_alpha,fpr,fnr\n";
    for (const DetPoint& p : curve)
        out << fmt_double(p.log_alpha) << "," << fmt_double(p.fpr) << "," << fmt_double(p.fnr)
            << "\n";
}

}  // namespace mlid
