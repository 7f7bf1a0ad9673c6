#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mlid/corpus.hpp"
#include "mlid/corpus_io.hpp"
#include "mlid/script.hpp"
#include "test_util.hpp"

using namespace mlid;
using mlid::testing::TempDir;
using mlid::testing::make_utterance;
using mlid::testing::write_file;

namespace {

const LanguagePair kEnZh{"en", "zh"};

}  // namespace

TEST(LanguagePair, Validation) {
    EXPECT_NO_THROW(kEnZh.validate());
    EXPECT_THROW((LanguagePair{"en", "en"}.validate()), input_error);
    EXPECT_THROW((LanguagePair{"", "zh"}.validate()), input_error);
    EXPECT_THROW((LanguagePair{"EN", "zh"}.validate()), input_error);
}

TEST(LoadCorpus, SingleMonolingualLine) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "speaker": null, "tokens": [{"surface": "hello", "lid": "en"}, {"surface": "world", "lid": "en"}]})"
               "\n");
    Corpus c = load_corpus(dir.file("c.jsonl"), kEnZh);
    ASSERT_EQ(c.utterances.size(), 1u);
    EXPECT_EQ(c.utterances[0].kind, Kind::MonolingualL1);
}

TEST(LoadCorpus, MixedTokensAreCodeSwitched) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "hello", "lid": "en"}, {"surface": "猫", "lid": "zh"}]})"
               "\n");
    Corpus c = load_corpus(dir.file("c.jsonl"), kEnZh);
    EXPECT_EQ(c.utterances[0].kind, Kind::CodeSwitched);
}

TEST(LoadCorpus, MalformedLineNamesLineNumber) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "a", "lid": "en"}]})" "\n"
               R"({"id": "u2", "tokens": [{"surface": "b", "lid": "en"}]})" "\n"
               "{not json\n");
    try {
        load_corpus(dir.file("c.jsonl"), kEnZh);
        FAIL() << "expected input_error";
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
    }
}

TEST(LoadCorpus, DuplicateIdRejected) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "a", "lid": "en"}]})" "\n"
               R"({"id": "u1", "tokens": [{"surface": "b", "lid": "en"}]})" "\n");
    EXPECT_THROW(load_corpus(dir.file("c.jsonl"), kEnZh), input_error);
}

TEST(LoadCorpus, EmptyCorpusRejected) {
    TempDir dir;
    write_file(dir.file("c.jsonl"), "\n");
    EXPECT_THROW(load_corpus(dir.file("c.jsonl"), kEnZh), input_error);
}

TEST(LoadCorpus, WhitespaceInSurfaceRejected) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "a b", "lid": "en"}]})" "\n");
    EXPECT_THROW(load_corpus(dir.file("c.jsonl"), kEnZh), input_error);
}

TEST(LoadCorpus, UnknownLidRejected) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "hola", "lid": "es"}]})" "\n");
    EXPECT_THROW(load_corpus(dir.file("c.jsonl"), kEnZh), input_error);
}

TEST(LoadCorpus, RoundTripIsIdentical) {
    TempDir dir;
    std::mt19937_64 rng(7);
    std::ostringstream lines;
    const char* surfaces[] = {"go", "stop", "猫", "狗", "ok"};
    const char* lids[] = {"en", "zh", "other"};
    for (int i = 0; i < 20; ++i) {
        lines << R"({"id": "u)" << i << R"(", "speaker": "s)" << (i % 3) << R"(", "tokens": [)";
        int len = 1 + static_cast<int>(rng() % 6);
        bool has_en = false, has_zh = false;
        for (int t = 0; t < len; ++t) {
            const char* lid = lids[rng() % 3];
            if (t == len - 1 && !has_en && !has_zh) lid = "en";
            if (std::string(lid) == "en") has_en = true;
            if (std::string(lid) == "zh") has_zh = true;
            if (t) lines << ", ";
            lines << R"({"surface": ")" << surfaces[rng() % 5] << R"(", "lid": ")" << lid
                  << R"("})";
        }
        lines << "]}\n";
    }
    write_file(dir.file("a.jsonl"), lines.str());
    Corpus first = load_corpus(dir.file("a.jsonl"), kEnZh);
    save_corpus(first, dir.file("b.jsonl"));
    Corpus second = load_corpus(dir.file("b.jsonl"), kEnZh);
    ASSERT_EQ(first.utterances.size(), second.utterances.size());
    for (std::size_t i = 0; i < first.utterances.size(); ++i)
        EXPECT_EQ(first.utterances[i], second.utterances[i]);
}

TEST(ClassifyKind, Examples) {
    EXPECT_EQ(make_utterance("u", "这:zh 个:zh", kEnZh).kind, Kind::MonolingualL2);
    EXPECT_EQ(make_utterance("u", "go:en 去:zh", kEnZh).kind, Kind::CodeSwitched);
    Utterance all_other = make_utterance("u", "x:other y:other", kEnZh, false);
    EXPECT_THROW(classify_kind(all_other), input_error);
}

TEST(ClassifyKind, MatchesLidSetsOnRandomSequences) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        Utterance u;
        u.id = "r";
        int len = 1 + static_cast<int>(rng() % 8);
        bool has_l1 = false, has_l2 = false;
        for (int i = 0; i < len; ++i) {
            Lid lid = static_cast<Lid>(1 + rng() % 3);  // L1, L2 or Other
            has_l1 |= lid == Lid::L1;
            has_l2 |= lid == Lid::L2;
            u.tokens.push_back({"w", lid, Script::Latin, ""});
        }
        if (!has_l1 && !has_l2) {
            EXPECT_THROW(classify_kind(u), input_error);
            continue;
        }
        Kind kind = classify_kind(u);
        EXPECT_EQ(kind == Kind::CodeSwitched, has_l1 && has_l2);
        if (kind == Kind::MonolingualL1) EXPECT_TRUE(has_l1 && !has_l2);
        if (kind == Kind::MonolingualL2) EXPECT_TRUE(has_l2 && !has_l1);
    }
}

TEST(TagByScript, HanAndLatinExample) {
    Utterance u = make_utterance("u", "毕业 study", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[0].lid, Lid::L2);
    EXPECT_EQ(u.tokens[1].lid, Lid::L1);
    EXPECT_EQ(u.tokens[0].script, Script::Han);
    EXPECT_EQ(u.tokens[1].script, Script::Latin);
}

TEST(TagByScript, DigitsAreNeutral) {
    // one Latin letter, one digit: Latin majority
    Utterance u = make_utterance("u", "a1", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[0].lid, Lid::L1);
}

TEST(TagByScript, BothLatinPairRejected) {
    Utterance u = make_utterance("u", "hola", LanguagePair{"en", "es"}, false);
    EXPECT_THROW(tag_by_script(u, LanguagePair{"en", "es"}), input_error);
}

TEST(TagByScript, NeutralInheritsFromPrecedingToken) {
    Utterance u = make_utterance("u", "毕业 123 study", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[1].lid, Lid::L2);  // follows the Han token
    EXPECT_EQ(u.tokens[1].script, Script::Neutral);
}

TEST(TagByScript, SentenceInitialNeutralInheritsFromFollowing) {
    Utterance u = make_utterance("u", "123 毕业", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[0].lid, Lid::L2);
}

TEST(TagByScript, AnnotatedTokensKept) {
    Utterance u = make_utterance("u", "nlb:other 毕业", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[0].lid, Lid::Other);
    EXPECT_EQ(u.tokens[1].lid, Lid::L2);
}

TEST(TagByScript, MixedScriptMajorityWins) {
    Utterance u = make_utterance("u", "qq群 毕业了吗x", kEnZh, false);
    u = tag_by_script(u, kEnZh);
    EXPECT_EQ(u.tokens[0].script, Script::Mixed);
    EXPECT_EQ(u.tokens[0].lid, Lid::L1);  // 2 Latin vs 1 Han
    EXPECT_EQ(u.tokens[1].lid, Lid::L2);  // 4 Han vs 1 Latin
}

TEST(TagByScript, Idempotent) {
    std::mt19937_64 rng(3);
    const char* surfaces[] = {"毕业", "study", "a1", "123", "...", "去到x", "qq群"};
    for (int trial = 0; trial < 100; ++trial) {
        Utterance u;
        u.id = "r";
        int len = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < len; ++i)
            u.tokens.push_back({surfaces[rng() % 7], Lid::None, Script::Neutral, ""});
        Utterance once = tag_by_script(u, kEnZh);
        Utterance twice = tag_by_script(once, kEnZh);
        EXPECT_EQ(once, twice);
    }
}

TEST(Splits, ValidatedAgainstCorpus) {
    TempDir dir;
    write_file(dir.file("c.jsonl"),
               R"({"id": "u1", "tokens": [{"surface": "a", "lid": "en"}]})" "\n"
               R"({"id": "u2", "tokens": [{"surface": "b", "lid": "en"}]})" "\n");
    write_file(dir.file("s.json"), R"({"train": ["u1"], "test": ["u2"]})");
    Corpus c = load_corpus(dir.file("c.jsonl"), kEnZh);
    c.splits = load_splits(dir.file("s.json"));
    EXPECT_NO_THROW(c.validate_splits());
    EXPECT_EQ(c.split_members("train").size(), 1u);

    c.splits["test"] = {"u1"};  // now overlaps train
    EXPECT_THROW(c.validate_splits(), input_error);
    c.splits["test"] = {"zzz"};
    EXPECT_THROW(c.validate_splits(), input_error);
}
