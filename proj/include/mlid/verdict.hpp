#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlid/corpus.hpp"
#include "mlid/util.hpp"

namespace mlid {

enum class MlLabel : std::uint8_t { L1, L2, Undetermined };

enum class Principle : std::uint8_t { P11, P12, P2, Baseline };

inline std::string to_string(Principle p) {
    switch (p) {
        case Principle::P11: return "p11";
        case Principle::P12: return "p12";
        case Principle::P2: return "p2";
        case Principle::Baseline: return "baseline";
    }
    return "?";
}

inline Principle principle_from_string(std::string_view s) {
    if (s == "p11") return Principle::P11;
    if (s == "p12") return Principle::P12;
    if (s == "p2") return Principle::P2;
    if (s == "baseline") return Principle::Baseline;
    throw input_error("unknown principle: " + std::string(s));
}

// Output of one principle on one utterance. Evidence ranges are half-open
// [begin, end) token index intervals supporting the verdict.
struct MLVerdict {
    MlLabel label = MlLabel::Undetermined;
    Principle principle = Principle::P11;
    std::vector<std::pair<std::size_t, std::size_t>> evidence;

    bool determined() const { return label != MlLabel::Undetermined; }
};

inline std::string label_code(MlLabel label, const LanguagePair& pair) {
    switch (label) {
        case MlLabel::L1: return pair.l1;
        case MlLabel::L2: return pair.l2;
        default: return "und";
    }
}

inline MlLabel label_from_code(std::string_view code, const LanguagePair& pair) {
    if (code == pair.l1) return MlLabel::L1;
    if (code == pair.l2) return MlLabel::L2;
    if (code == "und") return MlLabel::Undetermined;
    throw input_error("unknown verdict label: " + std::string(code));
}

// Verdicts serialize as JSONL:
//   {"id": str, "principle": str, "label": str, "evidence": [[start,end],...]}
inline std::string verdict_to_json(const std::string& id, const MLVerdict& v,
                                   const LanguagePair& pair) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["principle"] = to_string(v.principle);
    j["label"] = label_code(v.label, pair);
    j["evidence"] = nlohmann::ordered_json::array();
    for (const auto& [b, e] : v.evidence) j["evidence"].push_back({b, e});
    return j.dump();
}

inline void save_verdicts(const std::vector<std::pair<std::string, MLVerdict>>& verdicts,
                          const LanguagePair& pair, std::ostream& out) {
    for (const auto& [id, v] : verdicts) out << verdict_to_json(id, v, pair) << "\n";
}

inline std::vector<std::pair<std::string, MLVerdict>> load_verdicts(
    const std::filesystem::path& path, const LanguagePair& pair) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open verdict file: " + path.string());
    std::vector<std::pair<std::string, MLVerdict>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(sv);
        } catch (const nlohmann::json::exception& e) {
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": invalid JSON: " + e.what());
        }
        MLVerdict v;
        v.principle = principle_from_string(j.at("principle").get<std::string>());
        v.label = label_from_code(j.at("label").get<std::string>(), pair);
        if (j.contains("evidence"))
            for (const auto& range : j["evidence"])
                v.evidence.emplace_back(range.at(0).get<std::size_t>(),
                                        range.at(1).get<std::size_t>());
        out.emplace_back(j.at("id").get<std::string>(), std::move(v));
    }
    return out;
}

}  // namespace mlid
