#include <gtest/gtest.h>

#include "mlid/morpheme.hpp"
#include "test_util.hpp"

using namespace mlid;

namespace {

const std::filesystem::path kDataDir = MLID_DATA_DIR;

std::vector<std::string> morphemes_of(const MorphemeTokenizer& tok,
                                      const std::vector<std::string>& words) {
    return tok.tokenize(words).morphemes;
}

}  // namespace

TEST(SuffixTokenizer, SplitsStemAndAffix) {
    auto tok = morpheme_tokenizer_for("en", kDataDir);
    EXPECT_EQ(morphemes_of(tok, {"walking"}), (std::vector<std::string>{"walk", "+ing"}));
    EXPECT_EQ(morphemes_of(tok, {"cat"}), (std::vector<std::string>{"cat"}));
    EXPECT_EQ(morphemes_of(tok, {"cats"}), (std::vector<std::string>{"cat", "+s"}));
    EXPECT_EQ(morphemes_of(tok, {"boxes"}), (std::vector<std::string>{"box", "+es"}));
}

TEST(SuffixTokenizer, LongestMatchAndMinStem) {
    auto tok = MorphemeTokenizer::suffix_tokenizer({"ing", "s"});
    // "sing" would leave a one-letter stem: no split
    EXPECT_EQ(morphemes_of(tok, {"sing"}), (std::vector<std::string>{"sing"}));
    EXPECT_EQ(morphemes_of(tok, {"singing"}), (std::vector<std::string>{"sing", "+ing"}));
}

TEST(SuffixTokenizer, Lowercases) {
    auto tok = morpheme_tokenizer_for("en", kDataDir);
    EXPECT_EQ(morphemes_of(tok, {"Walking"}), (std::vector<std::string>{"walk", "+ing"}));
}

TEST(SuffixTokenizer, AtMostOneSplitPerWord) {
    auto tok = morpheme_tokenizer_for("en", kDataDir);
    auto m = morphemes_of(tok, {"paintings"});
    ASSERT_EQ(m.size(), 2u);  // painting + s or paint + ings, never three pieces
}

TEST(HanTokenizer, OneMorphemePerIdeograph) {
    auto tok = morpheme_tokenizer_for("zh", kDataDir);
    EXPECT_EQ(morphemes_of(tok, {"毕业"}), (std::vector<std::string>{"毕", "业"}));
    EXPECT_EQ(morphemes_of(tok, {"毕业", "吗"}), (std::vector<std::string>{"毕", "业", "吗"}));
}

TEST(HanTokenizer, LatinRunsStayWhole) {
    auto tok = morpheme_tokenizer_for("zh", kDataDir);
    EXPECT_EQ(morphemes_of(tok, {"parents"}), (std::vector<std::string>{"parents"}));
    EXPECT_EQ(morphemes_of(tok, {"a毕b"}), (std::vector<std::string>{"a", "毕", "b"}));
}

TEST(Tokenizer, SpansPointAtSourceTokens) {
    auto tok = morpheme_tokenizer_for("en", kDataDir);
    MorphemeSequence seq = tok.tokenize(std::vector<std::string>{"walking", "cats", "go"});
    ASSERT_EQ(seq.morphemes.size(), 5u);
    EXPECT_EQ(seq.source_token_spans, (std::vector<std::size_t>{0, 0, 1, 1, 2}));
    for (std::size_t i = 1; i < seq.source_token_spans.size(); ++i)
        EXPECT_LE(seq.source_token_spans[i - 1], seq.source_token_spans[i]);
}

TEST(Tokenizer, UnsupportedLanguageRejected) {
    EXPECT_THROW(morpheme_tokenizer_for("fr", kDataDir), input_error);
}

TEST(Tokenizer, SpanishTableApplies) {
    auto tok = morpheme_tokenizer_for("es", kDataDir);
    EXPECT_EQ(morphemes_of(tok, {"hablando"}), (std::vector<std::string>{"habl", "+ando"}));
}

TEST(Tokenizer, JsonRoundTrip) {
    auto tok = morpheme_tokenizer_for("en", kDataDir);
    auto restored = MorphemeTokenizer::from_json(tok.to_json());
    EXPECT_EQ(morphemes_of(restored, {"walking", "cats"}),
              morphemes_of(tok, {"walking", "cats"}));
    auto han = MorphemeTokenizer::from_json(MorphemeTokenizer::han_tokenizer().to_json());
    EXPECT_EQ(morphemes_of(han, {"毕业"}), (std::vector<std::string>{"毕", "业"}));
}
