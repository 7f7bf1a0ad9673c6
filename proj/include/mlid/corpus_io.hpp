#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "mlid/corpus.hpp"
#include "mlid/util.hpp"

namespace mlid {

// One utterance per line:
//   {"id": str, "speaker": str|null, "tokens": [{"surface": str, "lid": str|null}]}
// lid is a language code of the pair, "other", or null (to be script-tagged).
// Tokens may carry an optional "pos" tag used by the external-tagger path of
// the function-word principle.
inline Corpus load_corpus(const std::filesystem::path& path, const LanguagePair& pair) {
    pair.validate();
    std::ifstream in(path);
    if (!in) throw input_error("cannot open corpus file: " + path.string());

    Corpus corpus;
    corpus.pair = pair;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);  // tolerate CRLF and stray blanks
        if (sv.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(sv);
        } catch (const nlohmann::json::exception& e) {
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": invalid JSON: " + e.what());
        }
        auto fail = [&](const std::string& msg) -> input_error {
            return input_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
            throw fail("missing string field \"id\"");
        Utterance u;
        u.id = j["id"].get<std::string>();
        if (!ids.insert(u.id).second) throw fail("duplicate utterance id: " + u.id);
        if (j.contains("speaker") && j["speaker"].is_string())
            u.speaker = j["speaker"].get<std::string>();
        if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty())
            throw fail("utterance needs a non-empty \"tokens\" array");
        bool complete = true;
        for (const auto& tj : j["tokens"]) {
            if (!tj.is_object() || !tj.contains("surface") || !tj["surface"].is_string())
                throw fail("token needs a string \"surface\"");
            Token t;
            t.surface = tj["surface"].get<std::string>();
            if (t.surface.empty()) throw fail("empty token surface");
            if (contains_whitespace(t.surface))
                throw fail("token surface contains whitespace: \"" + t.surface + "\"");
            if (tj.contains("lid") && !tj["lid"].is_null()) {
                if (!tj["lid"].is_string()) throw fail("token \"lid\" must be a string or null");
                std::string code = tj["lid"].get<std::string>();
                if (code != "other" && !pair.contains(code))
                    throw fail("lid \"" + code + "\" is not in pair (" + pair.l1 + ", " +
                               pair.l2 + ") and not \"other\"");
                t.lid = pair.lid_of(code);
            } else {
                complete = false;
            }
            if (tj.contains("pos") && tj["pos"].is_string())
                t.pos = tj["pos"].get<std::string>();
            u.tokens.push_back(std::move(t));
        }
        // Fully tagged lines get their kind immediately; lines with null lids
        // stay unclassified until script tagging has run.
        if (complete) u.kind = classify_kind(u);
        corpus.utterances.push_back(std::move(u));
    }
    if (corpus.utterances.empty()) throw input_error("empty corpus: " + path.string());
    return corpus;
}

inline std::string utterance_to_json(const Utterance& u, const LanguagePair& pair) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    if (u.speaker.empty())
        j["speaker"] = nullptr;
    else
        j["speaker"] = u.speaker;
    j["tokens"] = nlohmann::ordered_json::array();
    for (const Token& t : u.tokens) {
        nlohmann::ordered_json tj;
        tj["surface"] = t.surface;
        if (t.lid == Lid::None)
            tj["lid"] = nullptr;
        else
            tj["lid"] = pair.code_of(t.lid);
        if (!t.pos.empty()) tj["pos"] = t.pos;
        j["tokens"].push_back(std::move(tj));
    }
    return j.dump();
}

inline void save_corpus(const Corpus& corpus, std::ostream& out) {
    for (const Utterance& u : corpus.utterances)
        out << utterance_to_json(u, corpus.pair) << "\n";
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write corpus file: " + path.string());
    save_corpus(corpus, out);
}

// Splits file: JSON object mapping split name -> list of utterance ids.
inline std::map<std::string, std::vector<std::string>> load_splits(
    const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw input_error("invalid splits file " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw input_error("splits file must be a JSON object");
    std::map<std::string, std::vector<std::string>> splits;
    for (const auto& [name, ids] : j.items()) {
        if (!ids.is_array()) throw input_error("split " + name + " must be an id array");
        for (const auto& id : ids) {
            if (!id.is_string()) throw input_error("split " + name + " has a non-string id");
            splits[name].push_back(id.get<std::string>());
        }
    }
    return splits;
}

}  // namespace mlid
