// Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
// Worked examples run through the actual CLI binary; numeric gates run
// in-process against independent oracles.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>

#include "lm_oracle.hpp"
#include "mlid/corpus_io.hpp"
#include "mlid/mapping.hpp"
#include "mlid/metrics.hpp"
#include "mlid/ngram.hpp"
#include "mlid/p12.hpp"
#include "mlid/principles.hpp"
#include "mlid/synth.hpp"
#include "mlid/verdict.hpp"
#include "test_util.hpp"

using namespace mlid;
using mlid::testing::KneserNeyOracle;
using mlid::testing::TempDir;
using mlid::testing::write_file;

namespace {

int run_cli(const std::string& args, std::string* output = nullptr) {
    std::string cmd = std::string(MLID_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return -1;
    char buf[4096];
    std::string out;
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    if (output) *output = out;
    return WEXITSTATUS(pclose(pipe));
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

class Acceptance : public ::testing::Test {
  protected:
    void TearDown() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::printf("[ACCEPTANCE] %s: %s\n", info->name(), HasFailure() ? "FAIL" : "PASS");
        std::fflush(stdout);
    }
};

std::string corpus_line(const std::string& id, const std::string& text) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["speaker"] = nullptr;
    j["tokens"] = nlohmann::ordered_json::array();
    for (auto word : split(text, ' ')) {
        if (word.empty()) continue;
        j["tokens"].push_back({{"surface", std::string(word)}, {"lid", nullptr}});
    }
    return j.dump() + "\n";
}

MorphemeSequence seq_of(const std::vector<std::string>& morphemes) {
    MorphemeSequence s;
    s.morphemes = morphemes;
    for (std::size_t i = 0; i < morphemes.size(); ++i) s.source_token_spans.push_back(i);
    return s;
}

std::map<std::string, std::string> verdict_labels(const std::filesystem::path& path,
                                                  const LanguagePair& pair) {
    std::map<std::string, std::string> out;
    for (const auto& [id, v] : load_verdicts(path, pair)) out[id] = label_code(v.label, pair);
    return out;
}

}  // namespace

// Worked examples: the four two-language rows plus the singleton and
// function-word illustrations, annotated through the CLI with the shipped
// lexicons, in under a second.
TEST_F(Acceptance, C1_worked_examples) {
    TempDir dir;
    std::string corpus;
    corpus += corpus_line("row1", "i thought all trains 都是 via jurongeast 去到 pasirris");
    corpus += corpus_line("row2", "but 他 蛮 zai 的 right");
    corpus += corpus_line("row3", "but 我的 parents 都 没有 sponsor 我");
    corpus += corpus_line("row4", "还有 chicken noodles");
    corpus += corpus_line("blog", "哦 你 post 在 你 的 那个 blog");
    corpus += corpus_line("yolk", "im okay with the 蛋黄");
    write_file(dir.file("worked.jsonl"), corpus);

    auto start = std::chrono::steady_clock::now();
    ASSERT_EQ(run_cli("ingest --input " + q(dir.file("worked.jsonl")) +
                      " --pair en,zh --output " + q(dir.file("tagged.jsonl"))),
              0);
    ASSERT_EQ(run_cli("annotate --corpus " + q(dir.file("tagged.jsonl")) +
                      " --pair en,zh --principle p11 --output " + q(dir.file("p11.jsonl"))),
              0);
    ASSERT_EQ(run_cli("annotate --corpus " + q(dir.file("tagged.jsonl")) +
                      " --pair en,zh --principle p2 --function-words " +
                      q(std::filesystem::path(MLID_DATA_DIR) / "function_words.tsv") +
                      " --output " + q(dir.file("p2.jsonl"))),
              0);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();

    const LanguagePair pair{"en", "zh"};
    auto p11 = verdict_labels(dir.file("p11.jsonl"), pair);
    EXPECT_EQ(p11.at("row1"), "en");
    EXPECT_EQ(p11.at("row2"), "zh");
    EXPECT_EQ(p11.at("row3"), "zh");
    EXPECT_EQ(p11.at("row4"), "en");
    EXPECT_EQ(p11.at("blog"), "zh");

    auto p2 = verdict_labels(dir.file("p2.jsonl"), pair);
    EXPECT_EQ(p2.at("row4"), "zh");
    EXPECT_EQ(p2.at("yolk"), "en");

    EXPECT_LT(elapsed, 1.0);
}

// Token-majority baseline on the possessive-heavy row.
TEST_F(Acceptance, C2_baseline_majority) {
    TempDir dir;
    write_file(dir.file("worked.jsonl"),
               corpus_line("row3", "but 我的 parents 都 没有 sponsor 我"));
    ASSERT_EQ(run_cli("ingest --input " + q(dir.file("worked.jsonl")) +
                      " --pair en,zh --output " + q(dir.file("tagged.jsonl"))),
              0);
    ASSERT_EQ(run_cli("annotate --corpus " + q(dir.file("tagged.jsonl")) +
                      " --pair en,zh --principle baseline --output " + q(dir.file("b.jsonl"))),
              0);
    EXPECT_EQ(verdict_labels(dir.file("b.jsonl"), {"en", "zh"}).at("row3"), "zh");
}

// Model scores must agree with a brute-force smoothing oracle, and
// conditional distributions must normalize.
TEST_F(Acceptance, C3_lm_oracle_equivalence) {
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(4242);
    const std::vector<std::string> pool = {"m0", "m1", "m2", "m3", "m4", "m5", "m6", "m7"};
    for (int trial = 0; trial < 100; ++trial) {
        int order = 1 + static_cast<int>(rng() % 3);
        int min_count = 1 + static_cast<int>(rng() % 2);
        std::vector<std::vector<std::string>> corpus;
        std::size_t budget = 50;
        int n_utt = 1 + static_cast<int>(rng() % 5);
        for (int u = 0; u < n_utt && budget > 0; ++u) {
            std::size_t len = 1 + rng() % std::min<std::size_t>(8, budget);
            budget -= len;
            std::vector<std::string> utt;
            for (std::size_t i = 0; i < len; ++i) utt.push_back(pool[rng() % pool.size()]);
            corpus.push_back(std::move(utt));
        }
        std::vector<MorphemeSequence> data;
        for (const auto& u : corpus) data.push_back(seq_of(u));
        LmTrainOptions opt;
        opt.order = order;
        opt.min_count = min_count;
        NGramLM lm = NGramLM::train(data, "xx", MorphemeTokenizer::suffix_tokenizer({}), opt);
        KneserNeyOracle oracle(corpus, order, min_count, opt.discount);

        for (int probe = 0; probe < 3; ++probe) {
            std::vector<std::string> words;
            std::size_t len = 1 + rng() % 6;
            for (std::size_t i = 0; i < len; ++i)
                words.push_back(rng() % 5 ? pool[rng() % pool.size()]
                                          : "oov" + std::to_string(rng() % 3));
            ASSERT_NEAR(lm.log_prob(seq_of(words)), oracle.sequence_log_prob(words), 1e-12);
        }
        std::vector<std::string> hist;
        for (std::size_t i = 0; i < rng() % 3; ++i) hist.push_back(pool[rng() % pool.size()]);
        double sum = 0.0;
        for (const std::string& w : lm.vocabulary()) sum += lm.conditional(w, hist);
        ASSERT_NEAR(sum, 1.0, 1e-9);
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    EXPECT_LT(elapsed, 30.0);
}

// Decision-function and threshold-estimation properties.
TEST_F(Acceptance, C4_decision_and_alpha_properties) {
    // decide is monotone in the threshold
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> score(-30.0, 0.0);
    std::uniform_real_distribution<double> thr(-8.0, 8.0);
    for (int i = 0; i < 500; ++i) {
        ScorePair s;
        s.id = "s";
        s.lp1 = score(rng);
        s.lp2 = score(rng);
        double t1 = thr(rng), t2 = thr(rng);
        if (t1 > t2) std::swap(t1, t2);
        if (decide(s, t2).label == MlLabel::L1) ASSERT_EQ(decide(s, t1).label, MlLabel::L1);
    }

    // a planted offset is recovered within +/- 0.1 from 1000 samples
    std::normal_distribution<double> noise(-12.0, 1.0);
    const double planted = -1.75;
    std::vector<std::pair<double, std::size_t>> side1, side2;
    for (int i = 0; i < 1000; ++i) {
        side1.emplace_back(noise(rng) + planted, 1);
        side2.emplace_back(noise(rng), 1);
    }
    AlphaEstimate est = estimate_alpha_from_scores(side1, side2, Normalization::Total);
    EXPECT_NEAR(est.log_alpha, planted, 0.1);

    // DET: monotone errors and exact agreement with hand enumeration
    std::vector<ScorePair> scores;
    auto mk = [](double diff) {
        ScorePair s;
        s.id = "x";
        s.lp1 = diff;
        s.lp2 = 0.0;
        return s;
    };
    scores = {mk(2.0), mk(0.5), mk(-1.0), mk(-3.0)};
    std::vector<MlLabel> truth = {MlLabel::L1, MlLabel::L2, MlLabel::L1, MlLabel::L2};
    auto curve = det_curve(scores, truth);
    ASSERT_EQ(curve.size(), 6u);
    const double expected[6][2] = {{1.0, 0.0},  {1.0, 0.0}, {0.5, 0.0},
                                   {0.5, 0.5},  {0.0, 0.5}, {0.0, 1.0}};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        EXPECT_DOUBLE_EQ(curve[i].fpr, expected[i][0]) << i;
        EXPECT_DOUBLE_EQ(curve[i].fnr, expected[i][1]) << i;
        if (i) {
            EXPECT_GE(curve[i - 1].fpr, curve[i].fpr);
            EXPECT_LE(curve[i - 1].fnr, curve[i].fnr);
        }
    }
}

// Full pipeline on 1000 synthetic utterances with known ground truth.
TEST_F(Acceptance, C5_synthetic_end_to_end) {
    auto start = std::chrono::steady_clock::now();

    auto evaluate = [](WordOrderFamily family) {
        auto [g1, g2] = make_grammar_pair(family, 77);
        SynthSpec spec;
        spec.grammar1 = g1;
        spec.grammar2 = g2;
        spec.insertion_rate = 0.45;
        spec.singleton_only = true;
        spec.count = 1000;
        spec.seed = 4001;
        SynthResult synth = generate(spec);
        SynthLexicons lex = generate_lexicons(spec);

        auto tok = MorphemeTokenizer::suffix_tokenizer({});
        auto mono = [&](MlLabel side, std::uint64_t seed) {
            SynthSpec m = spec;
            m.insertion_rate = 0.0;
            m.fixed_ml = side;
            m.count = 700;
            m.seed = seed;
            std::vector<MorphemeSequence> out;
            for (const Utterance& u : generate(m).corpus.utterances)
                out.push_back(tok.tokenize(u.tokens));
            return out;
        };
        LmTrainOptions opt;
        opt.order = 3;
        opt.min_count = 1;
        NGramLM lm1 = NGramLM::train(mono(MlLabel::L1, 91), g1.language, tok, opt);
        NGramLM lm2 = NGramLM::train(mono(MlLabel::L2, 92), g2.language, tok, opt);

        struct Rates {
            int cs = 0;
            int p11_cov = 0, p11_hit = 0;
            int p2_cov = 0, p2_hit = 0;
            int p12_hit = 0;
        } r;
        for (const Utterance& u : synth.corpus.utterances) {
            if (u.kind != Kind::CodeSwitched) continue;
            ++r.cs;
            MlLabel want = synth.truth.at(u.id);
            MLVerdict p11 = determine_p11(u);
            if (p11.determined()) {
                ++r.p11_cov;
                r.p11_hit += p11.label == want;
            }
            MLVerdict p2 = determine_p2(u, lex.function_words, synth.corpus.pair);
            if (p2.determined()) {
                ++r.p2_cov;
                r.p2_hit += p2.label == want;
            }
            ScorePair sp = score_utterance(u, lex.translation, lm1, lm2, tok, tok);
            r.p12_hit += decide(sp, 0.0).label == want;
        }
        return r;
    };

    auto distinct = evaluate(WordOrderFamily::Distinct);
    ASSERT_GT(distinct.cs, 500);
    ASSERT_GT(distinct.p11_cov, 0);
    ASSERT_GT(distinct.p2_cov, 0);
    EXPECT_EQ(distinct.p11_hit, distinct.p11_cov);  // P1.1 accuracy 100%
    EXPECT_EQ(distinct.p2_hit, distinct.p2_cov);    // P2 accuracy 100%
    double p12_distinct = static_cast<double>(distinct.p12_hit) / distinct.cs;
    EXPECT_GE(p12_distinct, 0.9);

    auto same = evaluate(WordOrderFamily::Same);
    double p12_same = static_cast<double>(same.p12_hit) / same.cs;
    EXPECT_LT(p12_same, p12_distinct);

    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    EXPECT_LT(elapsed, 120.0);

    std::printf("  p1.2 accuracy: distinct orders %.3f, same orders %.3f\n", p12_distinct,
                p12_same);
}

// Frozen metric values.
TEST_F(Acceptance, C6_metric_oracles) {
    std::vector<std::string> a = {"en", "zh", "en", "zh"};
    std::vector<std::string> b = {"zh", "en", "zh", "en"};
    EXPECT_DOUBLE_EQ(mcc(a, a), 1.0);
    EXPECT_DOUBLE_EQ(mcc(a, b), -1.0);

    std::vector<std::string> truth, pred;
    for (int i = 0; i < 4; ++i) { truth.push_back("p"); pred.push_back("p"); }
    for (int i = 0; i < 3; ++i) { truth.push_back("n"); pred.push_back("n"); }
    truth.push_back("n"); pred.push_back("p");
    for (int i = 0; i < 2; ++i) { truth.push_back("p"); pred.push_back("n"); }
    EXPECT_NEAR(mcc(truth, pred), 0.4082, 1e-4);

    std::vector<std::string> all_l1(10, "en"), balanced;
    for (int i = 0; i < 10; ++i) balanced.push_back(i % 2 ? "en" : "zh");
    EXPECT_NEAR(f1_macro(all_l1, balanced), 1.0 / 3.0, 1e-9);

    EXPECT_NEAR(m_index({0.5, 0.5}), 1.0, 1e-9);
    EXPECT_NEAR(m_index({0.75, 0.25}), 0.6, 1e-9);
}

// Mapping classifier gates: gradient check, separable fit, CV behaviour.
TEST_F(Acceptance, C7_mapping_correctness) {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        MappingModel model(4 + rng() % 3, 3 + rng() % 5, rng());
        std::vector<std::vector<double>> x;
        std::vector<MlLabel> y;
        for (int s = 0; s < 6; ++s) {
            std::vector<double> p(model.input_dim());
            double sum = 0;
            for (auto& v : p) sum += (v = u01(rng));
            for (auto& v : p) v /= sum;
            x.push_back(p);
            y.push_back(s % 2 ? MlLabel::L1 : MlLabel::L2);
        }
        EXPECT_LT(gradient_check(model, x, y), 1e-4);
    }

    LabeledDataset ds;
    ds.dim = 4;
    std::mt19937_64 rng2(11);
    std::uniform_real_distribution<double> jitter(0.0, 0.15);
    for (int i = 0; i < 20; ++i) {
        double j = jitter(rng2);
        ds.inputs.push_back({0.5 - j / 2, 0.4 - j / 2, j / 2 + 0.05, j / 2 + 0.05});
        ds.labels.push_back(MlLabel::L1);
        double k = jitter(rng2);
        ds.inputs.push_back({k / 2 + 0.05, k / 2 + 0.05, 0.45 - k / 2, 0.45 - k / 2});
        ds.labels.push_back(MlLabel::L2);
    }
    MlpConfig config;
    config.hidden = 8;
    config.epochs = 500;
    config.seed = 2;
    MappingModel trained = train_mapping(ds, config).model;
    int hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        hits += trained.predict(ds.inputs[i]).first == ds.labels[i];
    EXPECT_EQ(hits, static_cast<int>(ds.size()));  // training accuracy 1.0

    CvResult cv = cross_validate(ds, 5, 3, config);
    EXPECT_DOUBLE_EQ(cv.mean_f1, 1.0);

    LabeledDataset shuffled = ds;
    std::mt19937_64 rng3(17);
    for (auto& label : shuffled.labels)
        label = rng3() % 2 ? MlLabel::L1 : MlLabel::L2;
    shuffled.labels[0] = MlLabel::L1;
    shuffled.labels[1] = MlLabel::L2;
    CvResult chance = cross_validate(shuffled, 5, 3, config);
    EXPECT_GE(chance.mean_f1, 0.3);
    EXPECT_LE(chance.mean_f1, 0.7);
}

// Seeded CLI runs reproduce byte-identical artifacts.
TEST_F(Acceptance, C8_determinism) {
    TempDir dir;
    std::string synth_args = " --utterances 150 --insertion-rate 0.4 --seed 99";
    ASSERT_EQ(run_cli("synth --output-dir " + q(dir.file("one")) + synth_args), 0);
    ASSERT_EQ(run_cli("synth --output-dir " + q(dir.file("two")) + synth_args), 0);
    for (const char* name :
         {"corpus.jsonl", "truth.csv", "lexicon.tsv", "function_words.tsv"})
        EXPECT_EQ(read_file(dir.file("one") / name), read_file(dir.file("two") / name))
            << name;

    std::string train = "train-lm --corpus " + q(dir.file("one/corpus.jsonl")) +
                        " --pair xa,xb --lang xa --scheme latin --min-count 1 --output ";
    ASSERT_EQ(run_cli(train + q(dir.file("lm_a.json"))), 0);
    ASSERT_EQ(run_cli(train + q(dir.file("lm_b.json"))), 0);
    EXPECT_EQ(read_file(dir.file("lm_a.json")), read_file(dir.file("lm_b.json")));

    std::string annotate = "annotate --corpus " + q(dir.file("one/corpus.jsonl")) +
                           " --pair xa,xb --principle p11 --output ";
    ASSERT_EQ(run_cli(annotate + q(dir.file("v_a.jsonl"))), 0);
    ASSERT_EQ(run_cli(annotate + q(dir.file("v_b.jsonl")) + " --jobs 4"), 0);
    EXPECT_EQ(read_file(dir.file("v_a.jsonl")), read_file(dir.file("v_b.jsonl")));

    // mapping training with a fixed seed, twice
    std::string truth_csv = read_file(dir.file("one/truth.csv"));
    std::string posteriors = "id,p_0,p_1\n";
    for (auto line : split(truth_csv, '\n')) {
        if (trim(line).empty() || line.rfind("id,", 0) == 0) continue;
        auto cols = split(trim(line), ',');
        posteriors += std::string(cols[0]) + (cols[1] == "xa" ? ",0.9,0.1" : ",0.1,0.9");
        posteriors += "\n";
    }
    write_file(dir.file("post.csv"), posteriors);
    std::string map_args = "train-map --corpus " + q(dir.file("one/corpus.jsonl")) +
                           " --pair xa,xb --posteriors " + q(dir.file("post.csv")) +
                           " --provenance p11 --verdicts " + q(dir.file("v_a.jsonl")) +
                           " --seed 13 --output ";
    ASSERT_EQ(run_cli(map_args + q(dir.file("map_a.json"))), 0);
    ASSERT_EQ(run_cli(map_args + q(dir.file("map_b.json"))), 0);
    EXPECT_EQ(read_file(dir.file("map_a.json")), read_file(dir.file("map_b.json")));

    // reports
    std::string report_args = "report --corpus " + q(dir.file("one/corpus.jsonl")) +
                              " --pair xa,xb --verdicts " + q(dir.file("v_a.jsonl")) +
                              " --names p11 --output-dir ";
    ASSERT_EQ(run_cli(report_args + q(dir.file("rep_a"))), 0);
    ASSERT_EQ(run_cli(report_args + q(dir.file("rep_b"))), 0);
    EXPECT_EQ(read_file(dir.file("rep_a/distributions.csv")),
              read_file(dir.file("rep_b/distributions.csv")));
    EXPECT_EQ(read_file(dir.file("rep_a/report.json")),
              read_file(dir.file("rep_b/report.json")));
}
