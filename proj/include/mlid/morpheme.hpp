#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlid/corpus.hpp"
#include "mlid/script.hpp"
#include "mlid/util.hpp"

namespace mlid {

// Morpheme stream of an utterance plus, per morpheme, the index of the token
// it came from.
struct MorphemeSequence {
    std::vector<std::string> morphemes;
    std::vector<std::size_t> source_token_spans;

    std::size_t size() const { return morphemes.size(); }
};

// Splits tokens into pseudo-morphemes. Latin-script languages use
// suffix stripping against a fixed table (stem + "+suffix", longest match,
// one split per word); Han-script languages treat every ideograph as its own
// morpheme. All output is case folded.
class MorphemeTokenizer {
  public:
    enum class Scheme : std::uint8_t { Suffix, HanChars };

    static MorphemeTokenizer suffix_tokenizer(std::vector<std::string> suffixes,
                                              std::size_t min_stem = 3) {
        MorphemeTokenizer t;
        t.scheme_ = Scheme::Suffix;
        t.suffixes_ = std::move(suffixes);
        // longest-first so the first hit is the longest match
        std::sort(t.suffixes_.begin(), t.suffixes_.end(),
                  [](const std::string& a, const std::string& b) {
                      return a.size() != b.size() ? a.size() > b.size() : a < b;
                  });
        t.min_stem_ = min_stem;
        return t;
    }

    static MorphemeTokenizer han_tokenizer() {
        MorphemeTokenizer t;
        t.scheme_ = Scheme::HanChars;
        return t;
    }

    Scheme scheme() const { return scheme_; }

    MorphemeSequence tokenize(const std::vector<std::string>& surfaces) const {
        MorphemeSequence seq;
        for (std::size_t i = 0; i < surfaces.size(); ++i) {
            std::string folded = case_fold(surfaces[i]);
            if (scheme_ == Scheme::HanChars)
                append_han(folded, i, seq);
            else
                append_suffix_split(folded, i, seq);
        }
        return seq;
    }

    MorphemeSequence tokenize(const std::vector<Token>& tokens) const {
        std::vector<std::string> surfaces;
        surfaces.reserve(tokens.size());
        for (const Token& t : tokens) surfaces.push_back(t.surface);
        return tokenize(surfaces);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        if (scheme_ == Scheme::HanChars) {
            j["scheme"] = "han";
        } else {
            j["scheme"] = "suffix";
            j["suffixes"] = suffixes_;
            j["min_stem"] = min_stem_;
        }
        return j;
    }

    static MorphemeTokenizer from_json(const nlohmann::json& j) {
        std::string scheme = j.at("scheme").get<std::string>();
        if (scheme == "han") return han_tokenizer();
        if (scheme == "suffix")
            return suffix_tokenizer(j.at("suffixes").get<std::vector<std::string>>(),
                                    j.value("min_stem", std::size_t{3}));
        throw input_error("unknown tokenizer scheme: " + scheme);
    }

  private:
    void append_han(const std::string& folded, std::size_t token_index,
                    MorphemeSequence& seq) const {
        // Han code points split individually; contiguous non-Han runs stay
        // whole so pass-through Latin material stays one morpheme.
        std::string run;
        auto flush = [&] {
            if (run.empty()) return;
            seq.morphemes.push_back(run);
            seq.source_token_spans.push_back(token_index);
            run.clear();
        };
        for (char32_t cp : utf8_decode(folded)) {
            if (script_of(cp) == Script::Han) {
                flush();
                std::string one;
                utf8_append(one, cp);
                seq.morphemes.push_back(std::move(one));
                seq.source_token_spans.push_back(token_index);
            } else {
                utf8_append(run, cp);
            }
        }
        flush();
    }

    void append_suffix_split(const std::string& folded, std::size_t token_index,
                             MorphemeSequence& seq) const {
        for (const std::string& suffix : suffixes_) {
            if (folded.size() < suffix.size() + min_stem_) continue;
            if (folded.compare(folded.size() - suffix.size(), suffix.size(), suffix) != 0)
                continue;
            seq.morphemes.push_back(folded.substr(0, folded.size() - suffix.size()));
            seq.source_token_spans.push_back(token_index);
            seq.morphemes.push_back("+" + suffix);
            seq.source_token_spans.push_back(token_index);
            return;
        }
        seq.morphemes.push_back(folded);
        seq.source_token_spans.push_back(token_index);
    }

    Scheme scheme_ = Scheme::Suffix;
    std::vector<std::string> suffixes_;
    std::size_t min_stem_ = 3;
};

// One suffix per line; blank lines and #-comments skipped.
inline std::vector<std::string> load_suffix_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open suffix table: " + path.string());
    std::vector<std::string> suffixes;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        suffixes.push_back(case_fold(sv));
    }
    return suffixes;
}

// Registry of the built-in language schemes. `data_dir` holds the shipped
// suffix tables.
inline MorphemeTokenizer morpheme_tokenizer_for(const std::string& language,
                                                const std::filesystem::path& data_dir) {
    if (is_han_language(language)) return MorphemeTokenizer::han_tokenizer();
    if (language == "en" || language == "es")
        return MorphemeTokenizer::suffix_tokenizer(
            load_suffix_table(data_dir / "suffixes" / (language + ".txt")));
    throw input_error("unsupported language for morpheme tokenization: " + language);
}

inline MorphemeSequence tokenize_morphemes(const std::vector<Token>& tokens,
                                           const std::string& language,
                                           const std::filesystem::path& data_dir) {
    return morpheme_tokenizer_for(language, data_dir).tokenize(tokens);
}

}  // namespace mlid
