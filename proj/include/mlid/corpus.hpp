#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mlid/util.hpp"

namespace mlid {

// Language identity of a token, relative to the corpus pair.
enum class Lid : std::uint8_t { None, L1, L2, Other };

// Character-composition class of a token surface.
enum class Script : std::uint8_t { Neutral, Latin, Han, Mixed };

enum class Kind : std::uint8_t { Unclassified, MonolingualL1, MonolingualL2, CodeSwitched };

struct LanguagePair {
    std::string l1;
    std::string l2;

    void validate() const {
        auto check = [](const std::string& code) {
            if (code.empty()) throw input_error("language code must be non-empty");
            for (char c : code)
                if (c < 'a' || c > 'z')
                    throw input_error("language code must be lowercase ASCII: " + code);
        };
        check(l1);
        check(l2);
        if (l1 == l2) throw input_error("language pair must name two distinct languages");
    }

    bool contains(const std::string& code) const { return code == l1 || code == l2; }

    Lid lid_of(const std::string& code) const {
        if (code == l1) return Lid::L1;
        if (code == l2) return Lid::L2;
        if (code == "other") return Lid::Other;
        throw input_error("language code not in pair: " + code);
    }

    const std::string& code_of(Lid lid) const {
        static const std::string other = "other";
        switch (lid) {
            case Lid::L1: return l1;
            case Lid::L2: return l2;
            case Lid::Other: return other;
            default: throw compute_error("token has no language tag");
        }
    }
};

struct Token {
    std::string surface;
    Lid lid = Lid::None;
    Script script = Script::Neutral;
    std::string pos;  // optional external POS tag, empty when absent

    bool operator==(const Token&) const = default;
};

struct Utterance {
    std::string id;
    std::string speaker;
    std::vector<Token> tokens;
    Kind kind = Kind::Unclassified;

    bool operator==(const Utterance&) const = default;
};

// Decides whether an utterance is monolingual or code-switched from its
// token tags. OTHER tokens do not influence the decision.
inline Kind classify_kind(const Utterance& u) {
    bool has_l1 = false, has_l2 = false, has_tagged = false;
    for (const Token& t : u.tokens) {
        if (t.lid == Lid::None)
            throw input_error("utterance " + u.id + ": token without language tag");
        if (t.lid == Lid::L1) has_l1 = true;
        if (t.lid == Lid::L2) has_l2 = true;
        if (t.lid != Lid::Other) has_tagged = true;
    }
    if (!has_tagged)
        throw input_error("utterance " + u.id + ": every token tagged 'other'");
    if (has_l1 && has_l2) return Kind::CodeSwitched;
    return has_l1 ? Kind::MonolingualL1 : Kind::MonolingualL2;
}

struct Corpus {
    LanguagePair pair;
    std::vector<Utterance> utterances;
    std::map<std::string, std::vector<std::string>> splits;

    const Utterance* find(const std::string& id) const {
        for (const Utterance& u : utterances)
            if (u.id == id) return &u;
        return nullptr;
    }

    std::vector<const Utterance*> split_members(const std::string& name) const {
        auto it = splits.find(name);
        if (it == splits.end()) throw input_error("unknown split: " + name);
        std::vector<const Utterance*> out;
        for (const std::string& id : it->second) {
            const Utterance* u = find(id);
            if (!u) throw input_error("split " + name + " names unknown utterance " + id);
            out.push_back(u);
        }
        return out;
    }

    void validate_splits() const {
        std::set<std::string> seen;
        for (const auto& [name, ids] : splits) {
            for (const std::string& id : ids) {
                if (!find(id))
                    throw input_error("split " + name + " names unknown utterance " + id);
                if (!seen.insert(id).second)
                    throw input_error("utterance " + id + " appears in two splits");
            }
        }
    }
};

}  // namespace mlid
