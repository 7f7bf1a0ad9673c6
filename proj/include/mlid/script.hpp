#pragma once

#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/util.hpp"

namespace mlid {

// Script class of a single code point. Han ideographs and Latin letters are
// the two classes the tagger distinguishes; digits, punctuation and
// everything else count as neutral.
inline Script script_of(char32_t cp) {
    if ((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z')) return Script::Latin;
    if ((cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) ||
        (cp >= 0x1E00 && cp <= 0x1EFF))
        return Script::Latin;
    if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
        (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FA1F) ||
        cp == 0x3005 || cp == 0x3007)
        return Script::Han;
    return Script::Neutral;
}

// Composition class of a whole surface: Latin-only, Han-only, Mixed when
// both occur, Neutral when neither does.
inline Script token_script(std::string_view surface) {
    bool latin = false, han = false;
    for (char32_t cp : utf8_decode(surface)) {
        Script s = script_of(cp);
        if (s == Script::Latin) latin = true;
        if (s == Script::Han) han = true;
    }
    if (latin && han) return Script::Mixed;
    if (latin) return Script::Latin;
    if (han) return Script::Han;
    return Script::Neutral;
}

inline bool is_han_language(const std::string& code) {
    return code == "zh" || code == "cmn" || code == "yue";
}

namespace detail {

// Majority vote over non-neutral characters; Lid::None when tied or when the
// surface has no Latin/Han characters at all.
inline Lid script_majority_lid(std::string_view surface, Lid latin_lid, Lid han_lid) {
    int latin = 0, han = 0;
    for (char32_t cp : utf8_decode(surface)) {
        Script s = script_of(cp);
        if (s == Script::Latin) ++latin;
        if (s == Script::Han) ++han;
    }
    if (latin > han) return latin_lid;
    if (han > latin) return han_lid;
    return Lid::None;
}

}  // namespace detail

// Assigns language tags from character script. Only tokens without an
// explicit annotation are tagged; annotated tokens (including "other") are
// kept and may serve as neighbours for the inheritance rule. Tokens that
// stay undecided (neutral or tied) inherit from the nearest preceding
// decided token, or the nearest following one at the start of the utterance.
inline Utterance tag_by_script(Utterance u, const LanguagePair& pair) {
    bool l1_han = is_han_language(pair.l1);
    bool l2_han = is_han_language(pair.l2);
    if (l1_han == l2_han)
        throw input_error(
            "script tagging inapplicable for pair (" + pair.l1 + ", " + pair.l2 +
            "): need one Latin-script and one Han-script language");
    Lid han_lid = l1_han ? Lid::L1 : Lid::L2;
    Lid latin_lid = l1_han ? Lid::L2 : Lid::L1;

    for (Token& t : u.tokens) {
        t.script = token_script(t.surface);
        if (t.lid == Lid::None)
            t.lid = detail::script_majority_lid(t.surface, latin_lid, han_lid);
    }
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
        if (u.tokens[i].lid != Lid::None) continue;
        Lid inherited = Lid::None;
        for (std::size_t j = i; j-- > 0;) {
            if (u.tokens[j].lid != Lid::None) {
                inherited = u.tokens[j].lid;
                break;
            }
        }
        if (inherited == Lid::None) {
            for (std::size_t j = i + 1; j < u.tokens.size(); ++j) {
                if (u.tokens[j].lid != Lid::None) {
                    inherited = u.tokens[j].lid;
                    break;
                }
            }
        }
        // A fully neutral utterance ends up all-OTHER and is rejected later
        // by kind classification.
        u.tokens[i].lid = inherited == Lid::None ? Lid::Other : inherited;
    }
    return u;
}

}  // namespace mlid
