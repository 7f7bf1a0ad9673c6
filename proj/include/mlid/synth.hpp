#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/lexicon.hpp"
#include "mlid/util.hpp"
#include "mlid/verdict.hpp"

namespace mlid {

enum class SlotClass : std::uint8_t { Noun, Verb, Adj, Det, Aux, Sconj, Cconj };

inline bool is_content_slot(SlotClass c) {
    return c == SlotClass::Noun || c == SlotClass::Verb || c == SlotClass::Adj;
}

inline std::optional<FunctionClass> function_class_of_slot(SlotClass c) {
    switch (c) {
        case SlotClass::Det: return FunctionClass::Det;
        case SlotClass::Aux: return FunctionClass::Aux;
        case SlotClass::Sconj: return FunctionClass::Sconj;
        case SlotClass::Cconj: return FunctionClass::Cconj;
        default: return std::nullopt;
    }
}

// A toy language: class-partitioned vocabulary plus sentence templates that
// fix its word order. Content vocabularies of a pair are aligned by index so
// that index i of each class is a translation pair.
struct SynthGrammar {
    std::string language;
    std::map<SlotClass, std::vector<std::string>> vocab;
    std::vector<std::vector<SlotClass>> templates;

    void validate() const {
        if (templates.empty()) throw input_error("grammar has no templates");
        for (const auto& tmpl : templates) {
            if (tmpl.empty()) throw input_error("grammar has an empty template");
            for (SlotClass slot : tmpl) {
                auto it = vocab.find(slot);
                if (it == vocab.end() || it->second.empty())
                    throw input_error("template references an empty word class");
            }
        }
    }
};

enum class WordOrderFamily : std::uint8_t { Distinct, Same };

namespace detail {

inline std::vector<std::string> make_words(const std::vector<std::string>& syllables,
                                           std::size_t count, std::mt19937_64& rng,
                                           std::set<std::string>& used) {
    std::vector<std::string> words;
    std::uniform_int_distribution<std::size_t> pick(0, syllables.size() - 1);
    std::uniform_int_distribution<int> len(2, 3);
    while (words.size() < count) {
        std::string w;
        int n = len(rng);
        for (int i = 0; i < n; ++i) w += syllables[pick(rng)];
        if (used.insert(w).second) words.push_back(std::move(w));
    }
    return words;
}

inline SynthGrammar make_grammar(const std::string& language,
                                 const std::vector<std::string>& syllables,
                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<std::string> used;
    SynthGrammar g;
    g.language = language;
    g.vocab[SlotClass::Noun] = make_words(syllables, 12, rng, used);
    g.vocab[SlotClass::Verb] = make_words(syllables, 8, rng, used);
    g.vocab[SlotClass::Adj] = make_words(syllables, 6, rng, used);
    g.vocab[SlotClass::Det] = make_words(syllables, 4, rng, used);
    g.vocab[SlotClass::Aux] = make_words(syllables, 3, rng, used);
    g.vocab[SlotClass::Sconj] = make_words(syllables, 3, rng, used);
    g.vocab[SlotClass::Cconj] = make_words(syllables, 3, rng, used);
    return g;
}

}  // namespace detail

// Two built-in template families. The distinct pair opposes constituent
// orders (determiner-noun vs noun-determiner, auxiliary-verb vs
// verb-auxiliary); the same pair shares one order, which makes the
// morpheme-order signal collapse on purpose.
inline std::pair<SynthGrammar, SynthGrammar> make_grammar_pair(WordOrderFamily family,
                                                               std::uint64_t seed,
                                                               const std::string& lang1 = "xa",
                                                               const std::string& lang2 = "xb") {
    static const std::vector<std::string> syll1 = {"ba", "do", "ki", "lu", "me",
                                                   "no", "pa", "ri", "sa", "tu"};
    static const std::vector<std::string> syll2 = {"ve", "wo", "xi", "yu", "ze",
                                                   "fa", "ge", "hi", "jo", "qu"};
    SynthGrammar g1 = detail::make_grammar(lang1, syll1, derive_seed(seed, 1));
    SynthGrammar g2 = detail::make_grammar(lang2, syll2, derive_seed(seed, 2));

    using S = SlotClass;
    g1.templates = {
        {S::Det, S::Noun, S::Aux, S::Verb, S::Det, S::Noun},
        {S::Det, S::Adj, S::Noun, S::Verb, S::Det, S::Noun},
        {S::Sconj, S::Det, S::Noun, S::Verb, S::Det, S::Adj, S::Noun},
        {S::Det, S::Noun, S::Verb, S::Cconj, S::Det, S::Noun, S::Verb},
    };
    if (family == WordOrderFamily::Distinct) {
        g2.templates = {
            {S::Noun, S::Det, S::Noun, S::Det, S::Verb, S::Aux},
            {S::Noun, S::Adj, S::Det, S::Noun, S::Det, S::Verb},
            {S::Noun, S::Det, S::Adj, S::Noun, S::Det, S::Verb, S::Sconj},
            {S::Noun, S::Det, S::Verb, S::Noun, S::Det, S::Verb, S::Cconj},
        };
    } else {
        g2.templates = g1.templates;
    }
    g1.validate();
    g2.validate();
    return {std::move(g1), std::move(g2)};
}

struct SynthSpec {
    SynthGrammar grammar1, grammar2;
    std::optional<MlLabel> fixed_ml;  // nullopt: sample per utterance
    double ml_p1 = 0.5;               // P(ML = L1) when sampling
    double insertion_rate = 0.3;
    bool singleton_only = true;
    std::size_t count = 100;
    std::uint64_t seed = 0;

    LanguagePair pair() const { return {grammar1.language, grammar2.language}; }

    void validate() const {
        grammar1.validate();
        grammar2.validate();
        pair().validate();
        if (insertion_rate < 0.0 || insertion_rate > 1.0)
            throw input_error("insertion rate must lie in [0, 1]");
        if (ml_p1 < 0.0 || ml_p1 > 1.0) throw input_error("ml probability must lie in [0, 1]");
        if (count < 1) throw input_error("utterance count must be >= 1");
        if (fixed_ml && *fixed_ml == MlLabel::Undetermined)
            throw input_error("fixed matrix language must be L1 or L2");
        for (const auto& [cls, words] : grammar1.vocab) {
            auto it = grammar2.vocab.find(cls);
            std::size_t other = it == grammar2.vocab.end() ? 0 : it->second.size();
            if (words.size() != other)
                throw input_error("paired grammars must align their vocabularies per class");
            for (const auto& w : words)
                if (it != grammar2.vocab.end() &&
                    std::find(it->second.begin(), it->second.end(), w) != it->second.end())
                    throw input_error("paired grammar vocabularies must be disjoint");
        }
    }
};

struct SynthResult {
    Corpus corpus;
    std::map<std::string, MlLabel> truth;  // ground-truth ML per utterance
};

// Builds each utterance from the matrix language's template and vocabulary,
// then replaces content slots by their embedded-language translation pair at
// the insertion rate. Function words and word order always come from the
// ML. With singleton_only no two adjacent tokens end up embedded.
inline SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    SynthResult result;
    result.corpus.pair = spec.pair();

    for (std::size_t n = 0; n < spec.count; ++n) {
        std::mt19937_64 rng(derive_seed(spec.seed, n));
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        MlLabel ml = spec.fixed_ml ? *spec.fixed_ml
                                   : (u01(rng) < spec.ml_p1 ? MlLabel::L1 : MlLabel::L2);
        const SynthGrammar& mlg = ml == MlLabel::L1 ? spec.grammar1 : spec.grammar2;
        const SynthGrammar& elg = ml == MlLabel::L1 ? spec.grammar2 : spec.grammar1;
        Lid ml_lid = ml == MlLabel::L1 ? Lid::L1 : Lid::L2;
        Lid el_lid = ml == MlLabel::L1 ? Lid::L2 : Lid::L1;

        std::uniform_int_distribution<std::size_t> pick_template(0, mlg.templates.size() - 1);
        const auto& tmpl = mlg.templates[pick_template(rng)];

        Utterance u;
        char id[24];
        std::snprintf(id, sizeof id, "synth-%06zu", n);
        u.id = id;
        for (SlotClass slot : tmpl) {
            const auto& ml_words = mlg.vocab.at(slot);
            std::uniform_int_distribution<std::size_t> pick_word(0, ml_words.size() - 1);
            std::size_t w = pick_word(rng);
            bool replace = is_content_slot(slot) && u01(rng) < spec.insertion_rate;
            if (replace && spec.singleton_only && !u.tokens.empty() &&
                u.tokens.back().lid == el_lid)
                replace = false;
            if (replace)
                u.tokens.push_back({elg.vocab.at(slot)[w], el_lid, Script::Latin, ""});
            else
                u.tokens.push_back({ml_words[w], ml_lid, Script::Latin, ""});
        }
        u.kind = classify_kind(u);
        result.truth[u.id] = ml;
        result.corpus.utterances.push_back(std::move(u));
    }
    return result;
}

struct SynthLexicons {
    TranslationLexicon translation;
    std::map<std::string, FunctionWordLexicon> function_words;
};

// Exact lexicons covering all synthetic vocabulary: index-aligned
// translations in both directions, and the grammars' own function classes.
inline SynthLexicons generate_lexicons(const SynthSpec& spec) {
    spec.validate();
    SynthLexicons out;
    out.translation.pair = spec.pair();
    for (const auto& [cls, words1] : spec.grammar1.vocab) {
        const auto& words2 = spec.grammar2.vocab.at(cls);
        for (std::size_t i = 0; i < words1.size(); ++i) {
            out.translation.add(spec.grammar1.language, words1[i], words2[i]);
            out.translation.add(spec.grammar2.language, words2[i], words1[i]);
        }
    }
    for (const SynthGrammar* g : {&spec.grammar1, &spec.grammar2}) {
        FunctionWordLexicon lex;
        lex.language = g->language;
        for (const auto& [cls, words] : g->vocab)
            if (auto fc = function_class_of_slot(cls))
                for (const auto& w : words) lex.add(*fc, w);
        out.function_words[g->language] = std::move(lex);
    }
    return out;
}

inline void save_translation_lexicon_tsv(const TranslationLexicon& lex, std::ostream& out) {
    for (const auto& [src_lang, entries] : lex.entries)
        for (const auto& [src, targets] : entries)
            for (std::size_t i = 0; i < targets.size(); ++i)
                out << src_lang << "\t" << src << "\t" << targets[i] << "\t" << i + 1 << "\n";
}

inline void save_function_lexicons_tsv(const std::map<std::string, FunctionWordLexicon>& lexicons,
                                       std::ostream& out) {
    for (const auto& [lang, lex] : lexicons)
        for (const auto& [cls, words] : lex.classes)
            for (const auto& w : words) out << lang << "\t" << to_string(cls) << "\t" << w << "\n";
}

inline void save_truth_csv(const std::map<std::string, MlLabel>& truth, const LanguagePair& pair,
                           std::ostream& out) {
    out << "id,label\n";
    for (const auto& [id, label] : truth)
        out << csv_escape(id) << "," << label_code(label, pair) << "\n";
}

inline std::map<std::string, std::string> load_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open truth file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "id,label")
        throw input_error("truth file missing id,label header: " + path.string());
    std::map<std::string, std::string> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != 2) throw input_error("truth file row needs two columns");
        out[std::string(cols[0])] = std::string(cols[1]);
    }
    return out;
}

}  // namespace mlid
