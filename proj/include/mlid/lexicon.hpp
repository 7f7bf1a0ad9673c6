#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/util.hpp"

namespace mlid {

// The word classes treated as system (function) words: determiners,
// auxiliaries, subordinating and coordinating conjunctions.
enum class FunctionClass : std::uint8_t { Det, Aux, Sconj, Cconj };

inline const std::array<FunctionClass, 4>& all_function_classes() {
    static const std::array<FunctionClass, 4> classes{
        FunctionClass::Det, FunctionClass::Aux, FunctionClass::Sconj, FunctionClass::Cconj};
    return classes;
}

inline std::string to_string(FunctionClass c) {
    switch (c) {
        case FunctionClass::Det: return "DET";
        case FunctionClass::Aux: return "AUX";
        case FunctionClass::Sconj: return "SCONJ";
        case FunctionClass::Cconj: return "CCONJ";
    }
    return "?";
}

inline std::optional<FunctionClass> function_class_from_string(std::string_view s) {
    if (s == "DET") return FunctionClass::Det;
    if (s == "AUX") return FunctionClass::Aux;
    if (s == "SCONJ") return FunctionClass::Sconj;
    if (s == "CCONJ") return FunctionClass::Cconj;
    return std::nullopt;
}

// Word-by-word bilingual dictionary. Candidates are kept in priority order;
// lookups are exact-match after case folding.
struct TranslationLexicon {
    LanguagePair pair;
    // entries[src_code][folded surface] -> target candidates, best first
    std::map<std::string, std::map<std::string, std::vector<std::string>>> entries;

    void add(const std::string& src_lang, std::string_view src_surface,
             std::string_view tgt_surface) {
        if (!pair.contains(src_lang))
            throw input_error("lexicon entry for language outside pair: " + src_lang);
        // Multi-word glosses are collapsed to their first word so that
        // translation preserves sequence length.
        std::string tgt(trim(tgt_surface));
        if (auto sp = tgt.find(' '); sp != std::string::npos) tgt.resize(sp);
        if (tgt.empty()) throw input_error("empty translation target");
        entries[src_lang][case_fold(src_surface)].push_back(tgt);
    }

    const std::vector<std::string>* lookup(const std::string& src_lang,
                                           std::string_view surface) const {
        auto lit = entries.find(src_lang);
        if (lit == entries.end()) return nullptr;
        auto eit = lit->second.find(case_fold(surface));
        if (eit == lit->second.end()) return nullptr;
        return &eit->second;
    }
};

// Closed-class function-word inventory of one language.
struct FunctionWordLexicon {
    std::string language;
    std::map<FunctionClass, std::set<std::string>> classes{
        {FunctionClass::Det, {}},
        {FunctionClass::Aux, {}},
        {FunctionClass::Sconj, {}},
        {FunctionClass::Cconj, {}}};

    void add(FunctionClass cls, std::string_view surface) {
        std::string folded = case_fold(surface);
        for (const auto& [other, words] : classes)
            if (other != cls && words.count(folded))
                throw input_error("function word \"" + folded + "\" listed in two classes for " +
                                  language);
        classes[cls].insert(folded);
    }

    std::optional<FunctionClass> class_of(std::string_view surface) const {
        std::string folded = case_fold(surface);
        for (const auto& [cls, words] : classes)
            if (words.count(folded)) return cls;
        return std::nullopt;
    }
};

// TSV with columns: src_lang, src_surface, tgt_surface, priority.
// Rows are sorted by priority within a (src_lang, src_surface) group; ties
// keep file order.
inline TranslationLexicon load_translation_lexicon(const std::filesystem::path& path,
                                                   const LanguagePair& pair) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open lexicon file: " + path.string());
    struct Row {
        std::string src_lang, src, tgt;
        long priority;
        std::size_t order;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto cols = split(sv, '\t');
        if (cols.size() != 4)
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected 4 tab-separated columns");
        Row r;
        r.src_lang = std::string(cols[0]);
        r.src = std::string(cols[1]);
        r.tgt = std::string(cols[2]);
        try {
            r.priority = std::stol(std::string(cols[3]));
        } catch (const std::exception&) {
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": priority must be an integer");
        }
        r.order = rows.size();
        rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.src_lang != b.src_lang) return a.src_lang < b.src_lang;
        if (a.src != b.src) return a.src < b.src;
        if (a.priority != b.priority) return a.priority < b.priority;
        return a.order < b.order;
    });
    TranslationLexicon lex;
    lex.pair = pair;
    for (const Row& r : rows) lex.add(r.src_lang, r.src, r.tgt);
    return lex;
}

// TSV with columns: lang, class, surface. One file may hold several
// languages.
inline std::map<std::string, FunctionWordLexicon> load_function_lexicons(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open function-word file: " + path.string());
    std::map<std::string, FunctionWordLexicon> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto cols = split(sv, '\t');
        if (cols.size() != 3)
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected 3 tab-separated columns");
        auto cls = function_class_from_string(cols[1]);
        if (!cls)
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": unknown function class \"" + std::string(cols[1]) + "\"");
        std::string lang(cols[0]);
        auto& lex = out[lang];
        lex.language = lang;
        lex.add(*cls, cols[2]);
    }
    return out;
}

struct TranslationResult {
    std::vector<Token> tokens;
    int oov_count = 0;
};

// Replaces every token of the non-target language by its best lexicon
// candidate. Target-language and OTHER tokens pass through; so do
// out-of-vocabulary tokens, which are counted. Length and order never
// change.
inline TranslationResult translate_word_by_word(const Utterance& u, const std::string& target,
                                                const TranslationLexicon& lex) {
    if (!lex.pair.contains(target))
        throw input_error("translation target " + target + " is not in the lexicon pair");
    Lid target_lid = lex.pair.lid_of(target);
    Lid source_lid = target_lid == Lid::L1 ? Lid::L2 : Lid::L1;
    const std::string& source = lex.pair.code_of(source_lid);

    TranslationResult result;
    result.tokens.reserve(u.tokens.size());
    for (const Token& t : u.tokens) {
        if (t.lid != source_lid) {
            result.tokens.push_back(t);
            continue;
        }
        const auto* candidates = lex.lookup(source, t.surface);
        if (!candidates) {
            result.tokens.push_back(t);
            ++result.oov_count;
            continue;
        }
        Token translated = t;
        translated.surface = candidates->front();
        translated.lid = target_lid;
        result.tokens.push_back(std::move(translated));
    }
    return result;
}

// Function class of a token under the lexicon of its own language.
inline std::optional<FunctionClass> function_class_of(const Token& token,
                                                      const FunctionWordLexicon& lex,
                                                      const LanguagePair& pair) {
    if (token.lid == Lid::None || pair.code_of(token.lid) != lex.language)
        throw input_error("function-word lookup with mismatched language lexicon (token is " +
                          (token.lid == Lid::None ? std::string("untagged")
                                                  : pair.code_of(token.lid)) +
                          ", lexicon is " + lex.language + ")");
    return lex.class_of(token.surface);
}

}  // namespace mlid
