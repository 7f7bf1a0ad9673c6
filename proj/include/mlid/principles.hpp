#pragma once

#include <map>
#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/lexicon.hpp"
#include "mlid/verdict.hpp"

namespace mlid {

namespace detail {

// Maximal same-language run of tokens, OTHER tokens skipped (they neither
// break nor extend a run). `begin`/`end` are original token indices,
// half-open; `count` is the number of own-language tokens inside.
struct LidRun {
    Lid lid;
    std::size_t begin, end;
    std::size_t count;
};

inline std::vector<LidRun> lid_runs(const Utterance& u) {
    std::vector<LidRun> runs;
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
        Lid lid = u.tokens[i].lid;
        if (lid != Lid::L1 && lid != Lid::L2) continue;
        if (!runs.empty() && runs.back().lid == lid) {
            runs.back().end = i + 1;
            ++runs.back().count;
        } else {
            runs.push_back({lid, i, i + 1, 1});
        }
    }
    return runs;
}

inline void require_code_switched(const Utterance& u, const char* principle) {
    if (u.kind != Kind::CodeSwitched)
        throw input_error(std::string(principle) + " applies only to code-switched utterances (" +
                          u.id + " is not)");
}

}  // namespace detail

// The singleton principle. A language whose every occurrence is a single
// word surrounded by the other language (or the utterance boundary) is the
// embedded language; the surrounding language is the ML. When both languages
// occur only as singletons (perfect alternation) or both form multi-word
// islands, no frame can be told apart and the verdict is UNDETERMINED.
inline MLVerdict determine_p11(const Utterance& u) {
    detail::require_code_switched(u, "P1.1");
    MLVerdict v;
    v.principle = Principle::P11;

    auto runs = detail::lid_runs(u);
    bool only_singles_l1 = true, only_singles_l2 = true;
    for (const auto& run : runs) {
        if (run.count > 1) {
            if (run.lid == Lid::L1) only_singles_l1 = false;
            else only_singles_l2 = false;
        }
    }
    if (only_singles_l1 == only_singles_l2) return v;  // ambiguous or no frame

    Lid embedded = only_singles_l1 ? Lid::L1 : Lid::L2;
    v.label = embedded == Lid::L1 ? MlLabel::L2 : MlLabel::L1;
    for (const auto& run : runs)
        if (run.lid == embedded) v.evidence.emplace_back(run.begin, run.end);
    return v;
}

// The system-word principle. Function words (DET/AUX/SCONJ/CCONJ) are looked
// up per token: a token with an external POS tag uses that tag, otherwise
// the function-word lexicon of its language decides. The verdict is the
// language that contributed function words, provided the other one did not.
inline MLVerdict determine_p2(const Utterance& u,
                              const std::map<std::string, FunctionWordLexicon>& lexicons,
                              const LanguagePair& pair) {
    detail::require_code_switched(u, "P2");
    MLVerdict v;
    v.principle = Principle::P2;

    std::vector<std::pair<std::size_t, std::size_t>> hits_l1, hits_l2;
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
        const Token& t = u.tokens[i];
        if (t.lid != Lid::L1 && t.lid != Lid::L2) continue;
        bool is_function = false;
        if (!t.pos.empty()) {
            is_function = function_class_from_string(t.pos).has_value();
        } else {
            const std::string& code = pair.code_of(t.lid);
            auto it = lexicons.find(code);
            if (it == lexicons.end())
                throw input_error("missing function-word lexicon for language " + code);
            is_function = function_class_of(t, it->second, pair).has_value();
        }
        if (is_function)
            (t.lid == Lid::L1 ? hits_l1 : hits_l2).emplace_back(i, i + 1);
    }
    if (hits_l1.empty() == hits_l2.empty()) return v;  // conflict or no evidence
    v.label = hits_l1.empty() ? MlLabel::L2 : MlLabel::L1;
    v.evidence = hits_l1.empty() ? std::move(hits_l2) : std::move(hits_l1);
    return v;
}

// Token-majority baseline: the language with strictly more tokens wins,
// OTHER tokens excluded. Ties stay undetermined.
inline MLVerdict determine_baseline(const Utterance& u) {
    detail::require_code_switched(u, "baseline");
    MLVerdict v;
    v.principle = Principle::Baseline;

    std::size_t c1 = 0, c2 = 0;
    for (const Token& t : u.tokens) {
        if (t.lid == Lid::L1) ++c1;
        if (t.lid == Lid::L2) ++c2;
    }
    if (c1 == c2) return v;
    v.label = c1 > c2 ? MlLabel::L1 : MlLabel::L2;
    Lid winner = c1 > c2 ? Lid::L1 : Lid::L2;
    for (const auto& run : detail::lid_runs(u))
        if (run.lid == winner) v.evidence.emplace_back(run.begin, run.end);
    return v;
}

// Fraction of verdicts that are determined.
inline double coverage(const std::vector<MLVerdict>& verdicts) {
    if (verdicts.empty()) throw compute_error("coverage over zero code-switched utterances");
    std::size_t determined = 0;
    for (const MLVerdict& v : verdicts)
        if (v.determined()) ++determined;
    return static_cast<double>(determined) / static_cast<double>(verdicts.size());
}

}  // namespace mlid
