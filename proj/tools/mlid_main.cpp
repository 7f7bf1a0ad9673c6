// mlid: matrix language identification toolkit for code-switched text.
//
// Subcommands cover the whole pipeline: corpus ingestion and script tagging,
// the three textual principles, n-gram LM training and scoring, threshold
// estimation and DET curves, posterior-mapping classifiers, agreement
// metrics, distribution reports and synthetic corpus generation.
//
// Exit codes: 0 success, 2 input error, 3 computation error. Every run
// writes a manifest next to its primary output; outputs are staged to
// temporary files and renamed on success so failed runs leave nothing
// behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlid/corpus.hpp"
#include "mlid/corpus_io.hpp"
#include "mlid/lexicon.hpp"
#include "mlid/manifest.hpp"
#include "mlid/mapping.hpp"
#include "mlid/metrics.hpp"
#include "mlid/morpheme.hpp"
#include "mlid/ngram.hpp"
#include "mlid/p12.hpp"
#include "mlid/principles.hpp"
#include "mlid/script.hpp"
#include "mlid/synth.hpp"
#include "mlid/util.hpp"
#include "mlid/verdict.hpp"

namespace fs = std::filesystem;
using namespace mlid;

#ifndef MLID_DEFAULT_DATA_DIR
#define MLID_DEFAULT_DATA_DIR ""
#endif

namespace {

// Outputs are written to temp paths and renamed in one commit step.
class OutputStager {
  public:
    ~OutputStager() {
        if (committed_) return;
        for (const auto& [final_path, tmp] : staged_) {
            std::error_code ec;
            fs::remove(tmp, ec);
        }
    }

    fs::path stage(const fs::path& final_path) {
        if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());
        fs::path tmp = final_path.string() + ".tmp";
        staged_.emplace_back(final_path, tmp);
        return tmp;
    }

    void commit() {
        for (const auto& [final_path, tmp] : staged_) fs::rename(tmp, final_path);
        committed_ = true;
    }

    std::vector<std::string> final_paths() const {
        std::vector<std::string> out;
        for (const auto& [final_path, tmp] : staged_) out.push_back(final_path.string());
        return out;
    }

  private:
    std::vector<std::pair<fs::path, fs::path>> staged_;
    bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path.string());
    out << content;
}

LanguagePair parse_pair(const std::string& spec) {
    auto parts = split(spec, ',');
    if (parts.size() != 2)
        throw input_error("--pair expects two comma-separated language codes, e.g. en,zh");
    LanguagePair pair{std::string(trim(parts[0])), std::string(trim(parts[1]))};
    pair.validate();
    return pair;
}

// Flat JSON config file: keys are long option names, values become argv
// tokens inserted before the user's flags so the command line wins. The
// --config tokens themselves are consumed here, before CLI11 sees them.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args;
    fs::path config_path;
    for (int i = 1; i < argc; ++i) {
        if (std::string_view(argv[i]) == "--config") {
            if (i + 1 >= argc) throw input_error("--config needs a file");
            config_path = argv[++i];
            continue;
        }
        args.emplace_back(argv[i]);
    }
    if (config_path.empty()) return args;

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        throw input_error("invalid config file " + config_path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw input_error("config file must be a JSON object");
    std::vector<std::string> injected;
    for (const auto& [key, value] : j.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back("--" + key);
            continue;
        }
        injected.push_back("--" + key);
        if (value.is_string()) injected.push_back(value.get<std::string>());
        else injected.push_back(value.dump());
    }
    if (args.empty()) return args;
    std::vector<std::string> out;
    out.push_back(args.front());  // subcommand
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
}

Corpus load_tagged_corpus(const fs::path& path, const LanguagePair& pair) {
    Corpus corpus = load_corpus(path, pair);
    for (const Utterance& u : corpus.utterances)
        if (u.kind == Kind::Unclassified)
            throw input_error("utterance " + u.id +
                              " has untagged tokens; run `mlid ingest` first");
    return corpus;
}

std::vector<const Utterance*> select_utterances(const Corpus& corpus,
                                                const std::string& split) {
    std::vector<const Utterance*> out;
    if (split.empty()) {
        for (const Utterance& u : corpus.utterances) out.push_back(&u);
    } else {
        out = corpus.split_members(split);
    }
    return out;
}

std::vector<Utterance> monolingual_side(const std::vector<const Utterance*>& utterances,
                                        Kind kind) {
    std::vector<Utterance> out;
    for (const Utterance* u : utterances)
        if (u->kind == kind) out.push_back(*u);
    return out;
}

MorphemeTokenizer resolve_tokenizer(const std::string& scheme, const std::string& language,
                                    const fs::path& data_dir, const fs::path& suffix_file) {
    if (scheme == "han") return MorphemeTokenizer::han_tokenizer();
    if (scheme == "latin") {
        if (!suffix_file.empty())
            return MorphemeTokenizer::suffix_tokenizer(load_suffix_table(suffix_file));
        return MorphemeTokenizer::suffix_tokenizer({});
    }
    if (scheme != "auto") throw input_error("unknown tokenizer scheme: " + scheme);
    if (!suffix_file.empty())
        return MorphemeTokenizer::suffix_tokenizer(load_suffix_table(suffix_file));
    return morpheme_tokenizer_for(language, data_dir);
}

std::map<std::string, MLVerdict> verdict_map(
    const std::vector<std::pair<std::string, MLVerdict>>& verdicts) {
    std::map<std::string, MLVerdict> out;
    for (const auto& [id, v] : verdicts) out[id] = v;
    return out;
}

struct CommonOpts {
    std::string corpus;
    std::string pair;
    std::string split;
    std::string splits_file;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_split = true) {
    cmd->add_option("--corpus", o.corpus, "corpus JSONL file")->required();
    cmd->add_option("--pair", o.pair, "language pair, e.g. en,zh")->required();
    if (with_split) {
        cmd->add_option("--split", o.split, "restrict to a named split");
        cmd->add_option("--splits", o.splits_file, "splits JSON file");
    }
}

Corpus load_with_splits(const CommonOpts& o, RunManifest& manifest) {
    LanguagePair pair = parse_pair(o.pair);
    Corpus corpus = load_tagged_corpus(o.corpus, pair);
    manifest.add_input(o.corpus);
    if (!o.splits_file.empty()) {
        corpus.splits = load_splits(o.splits_file);
        corpus.validate_splits();
        manifest.add_input(o.splits_file);
    } else if (!o.split.empty()) {
        throw input_error("--split requires --splits");
    }
    return corpus;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix language identification for code-switched text"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for every subcommand");

    // --config is consumed by expand_config before parsing; this option only
    // documents it
    std::string config_file;
    app.add_option("--config", config_file, "JSON config file (flags override it)")
        ->expected(1);

    const fs::path default_data_dir = MLID_DEFAULT_DATA_DIR;

    // ---- ingest ----------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "load, script-tag and classify a corpus");
    struct {
        std::string input, pair, splits, output;
    } ing;
    ingest->add_option("--input", ing.input, "raw corpus JSONL")->required();
    ingest->add_option("--pair", ing.pair, "language pair, e.g. en,zh")->required();
    ingest->add_option("--splits", ing.splits, "splits JSON file to validate");
    ingest->add_option("--output", ing.output, "tagged corpus JSONL")->required();

    // ---- annotate --------------------------------------------------------
    auto* annotate =
        app.add_subcommand("annotate", "run a principle over code-switched utterances");
    struct {
        CommonOpts common;
        std::string principle, output, function_words, lexicon, lm1, lm2, scores, alpha_from;
        double log_alpha = 0.0;
        unsigned jobs = 1;
    } ann;
    add_common(annotate, ann.common, false);
    annotate->add_option("--principle", ann.principle, "p11, p2, baseline or p12")->required();
    annotate->add_option("--output", ann.output, "verdict JSONL")->required();
    annotate->add_option("--function-words", ann.function_words,
                         "function-word TSV (p2; default: shipped lexicons)");
    annotate->add_option("--lexicon", ann.lexicon, "translation lexicon TSV (p12)");
    annotate->add_option("--lm1", ann.lm1, "model for the first language (p12)");
    annotate->add_option("--lm2", ann.lm2, "model for the second language (p12)");
    annotate->add_option("--log-alpha", ann.log_alpha, "decision threshold (p12)");
    annotate->add_option("--alpha-from", ann.alpha_from,
                         "read log_alpha from an estimate-alpha output (p12)");
    annotate->add_option("--scores", ann.scores, "also write score CSV (p12)");
    annotate->add_option("--jobs", ann.jobs, "worker threads");

    // ---- train-lm --------------------------------------------------------
    auto* train_lm = app.add_subcommand("train-lm", "train a morpheme n-gram model");
    struct {
        CommonOpts common;
        std::string lang, scheme = "auto", suffixes, output, data_dir;
        int order = 3, min_count = 2;
        double discount = 0.75;
    } tlm;
    add_common(train_lm, tlm.common);
    train_lm->add_option("--lang", tlm.lang, "language to train on")->required();
    train_lm->add_option("--order", tlm.order, "n-gram order");
    train_lm->add_option("--min-count", tlm.min_count, "rarer morphemes become <unk>");
    train_lm->add_option("--discount", tlm.discount, "Kneser-Ney discount");
    train_lm->add_option("--scheme", tlm.scheme, "tokenizer: auto, latin or han");
    train_lm->add_option("--suffixes", tlm.suffixes, "suffix table file (latin scheme)");
    train_lm->add_option("--data-dir", tlm.data_dir, "shipped data directory");
    train_lm->add_option("--output", tlm.output, "model JSON file")->required();

    // ---- perplexity ------------------------------------------------------
    auto* ppl = app.add_subcommand("perplexity", "perplexity of a model on a corpus");
    struct {
        CommonOpts common;
        std::string lm, output;
    } pplo;
    add_common(ppl, pplo.common);
    ppl->add_option("--lm", pplo.lm, "model JSON file")->required();
    ppl->add_option("--output", pplo.output, "also write a JSON result");

    // ---- wo-probe --------------------------------------------------------
    auto* probe =
        app.add_subcommand("wo-probe", "word-order detection among permuted variants");
    struct {
        CommonOpts common;
        std::string lm, output;
        int max_permutations = 20;
        std::uint64_t seed = 0;
    } prb;
    add_common(probe, prb.common);
    probe->add_option("--lm", prb.lm, "model JSON file")->required();
    probe->add_option("--max-permutations", prb.max_permutations, "permutations per utterance");
    probe->add_option("--seed", prb.seed, "permutation sampling seed");
    probe->add_option("--output", prb.output, "per-utterance result CSV");

    // ---- translate -------------------------------------------------------
    auto* translate = app.add_subcommand("translate", "word-by-word translation of a corpus");
    struct {
        CommonOpts common;
        std::string lexicon, target, output;
    } trn;
    add_common(translate, trn.common, false);
    translate->add_option("--lexicon", trn.lexicon, "translation lexicon TSV")->required();
    translate->add_option("--target", trn.target, "target language code")->required();
    translate->add_option("--output", trn.output, "translated corpus JSONL")->required();

    // ---- estimate-alpha --------------------------------------------------
    auto* alpha =
        app.add_subcommand("estimate-alpha", "estimate log alpha from monolingual scores");
    struct {
        CommonOpts common;
        std::string lm1, lm2, normalization = "total", output;
    } alp;
    add_common(alpha, alp.common);
    alpha->add_option("--lm1", alp.lm1, "model for the first language")->required();
    alpha->add_option("--lm2", alp.lm2, "model for the second language")->required();
    alpha->add_option("--normalization", alp.normalization, "total or per-morpheme");
    alpha->add_option("--output", alp.output, "estimate JSON file")->required();

    // ---- det -------------------------------------------------------------
    auto* det = app.add_subcommand("det", "detection error tradeoff curve");
    struct {
        std::string scores, truth, pair, output;
    } deto;
    det->add_option("--scores", deto.scores, "score CSV from annotate --principle p12")
        ->required();
    det->add_option("--truth", deto.truth, "reference labels CSV (id,label)")->required();
    det->add_option("--pair", deto.pair, "language pair, e.g. en,zh")->required();
    det->add_option("--output", deto.output, "curve CSV")->required();

    // ---- train-map -------------------------------------------------------
    auto* train_map = app.add_subcommand("train-map", "train a posterior-to-MLID classifier");
    struct {
        CommonOpts common;
        std::string posteriors, provenance, verdicts, output;
        MlpConfig config;
    } tmo;
    add_common(train_map, tmo.common, false);
    train_map->add_option("--posteriors", tmo.posteriors, "posterior CSV")->required();
    train_map->add_option("--provenance", tmo.provenance, "mono, p11, p12 or p2")->required();
    train_map->add_option("--verdicts", tmo.verdicts, "pseudo-label verdict JSONL");
    train_map->add_option("--hidden", tmo.config.hidden, "hidden layer width");
    train_map->add_option("--epochs", tmo.config.epochs, "training epochs");
    train_map->add_option("--lr", tmo.config.learning_rate, "learning rate");
    train_map->add_option("--seed", tmo.config.seed, "initialization seed");
    train_map->add_option("--val-fraction", tmo.config.validation_fraction,
                          "held-out fraction for early stopping (0 disables)");
    train_map->add_option("--patience", tmo.config.patience, "early stopping patience");
    train_map->add_option("--output", tmo.output, "model JSON file")->required();

    // ---- predict-map -----------------------------------------------------
    auto* predict_map = app.add_subcommand("predict-map", "classify posterior vectors");
    struct {
        std::string model, posteriors, pair, output;
    } pmo;
    predict_map->add_option("--model", pmo.model, "mapping model JSON")->required();
    predict_map->add_option("--posteriors", pmo.posteriors, "posterior CSV")->required();
    predict_map->add_option("--pair", pmo.pair, "language pair, e.g. en,zh")->required();
    predict_map->add_option("--output", pmo.output, "prediction CSV")->required();

    // ---- cv-map ----------------------------------------------------------
    auto* cv_map = app.add_subcommand("cv-map", "stratified cross-validation of the mapping");
    struct {
        CommonOpts common;
        std::string posteriors, provenance, verdicts, output;
        int k = 5;
        std::uint64_t seed = 0;
        MlpConfig config;
    } cvo;
    add_common(cv_map, cvo.common, false);
    cv_map->add_option("--posteriors", cvo.posteriors, "posterior CSV")->required();
    cv_map->add_option("--provenance", cvo.provenance, "mono, p11, p12 or p2")->required();
    cv_map->add_option("--verdicts", cvo.verdicts, "pseudo-label verdict JSONL");
    cv_map->add_option("--k", cvo.k, "number of folds");
    cv_map->add_option("--seed", cvo.seed, "fold shuffling seed");
    cv_map->add_option("--hidden", cvo.config.hidden, "hidden layer width");
    cv_map->add_option("--epochs", cvo.config.epochs, "training epochs");
    cv_map->add_option("--lr", cvo.config.learning_rate, "learning rate");
    cv_map->add_option("--output", cvo.output, "result JSON file")->required();

    // ---- eval ------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "agreement and truth metrics between systems");
    struct {
        std::string pair, truth, output_dir;
        std::vector<std::string> verdicts, names;
    } evo;
    eval->add_option("--verdicts", evo.verdicts, "verdict JSONL files")
        ->required()
        ->expected(-1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    eval->add_option("--names", evo.names, "system names (default: file stems)")
        ->expected(-1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    eval->add_option("--pair", evo.pair, "language pair, e.g. en,zh")->required();
    eval->add_option("--truth", evo.truth, "ground-truth CSV (id,label)");
    eval->add_option("--output-dir", evo.output_dir, "directory for CSV reports")->required();

    // ---- report ----------------------------------------------------------
    auto* report = app.add_subcommand("report", "language distributions and M-index");
    struct {
        CommonOpts common;
        std::vector<std::string> verdicts, names;
        std::string output_dir;
    } rpo;
    add_common(report, rpo.common, false);
    report->add_option("--verdicts", rpo.verdicts, "verdict JSONL files")
        ->expected(-1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    report->add_option("--names", rpo.names, "system names (default: file stems)")
        ->expected(-1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    report->add_option("--output-dir", rpo.output_dir, "directory for reports")->required();

    // ---- synth -----------------------------------------------------------
    auto* synth =
        app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
    struct {
        std::string output_dir, family = "distinct", fixed_ml, lang1 = "xa", lang2 = "xb";
        std::size_t count = 1000;
        double insertion_rate = 0.3, ml_p1 = 0.5;
        bool singleton_only = true;
        std::uint64_t seed = 0, grammar_seed = 7;
    } syo;
    synth->add_option("--output-dir", syo.output_dir, "directory for corpus and lexicons")
        ->required();
    synth->add_option("--family", syo.family, "template family: distinct or same");
    synth->add_option("--utterances", syo.count, "number of utterances");
    synth->add_option("--insertion-rate", syo.insertion_rate, "embedded-word rate in [0,1]");
    synth->add_flag("--singleton-only,!--allow-islands", syo.singleton_only,
                    "forbid adjacent embedded words (default on)");
    synth->add_option("--fixed-ml", syo.fixed_ml, "fix the matrix language to this code");
    synth->add_option("--ml-p1", syo.ml_p1, "P(ML = first language) when sampling");
    synth->add_option("--seed", syo.seed, "generation seed");
    synth->add_option("--grammar-seed", syo.grammar_seed, "vocabulary seed");
    synth->add_option("--lang1", syo.lang1, "first language code");
    synth->add_option("--lang2", syo.lang2, "second language code");

    // -----------------------------------------------------------------------

    try {
        auto args = expand_config(argc, argv);
        std::vector<const char*> cargs;
        cargs.push_back(argv[0]);
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(ingest)) {
            LanguagePair pair = parse_pair(ing.pair);
            RunManifest manifest;
            manifest.command = "ingest";
            Corpus corpus = load_corpus(ing.input, pair);
            manifest.add_input(ing.input);
            bool needs_tagging = false;
            for (const Utterance& u : corpus.utterances)
                for (const Token& t : u.tokens)
                    if (t.lid == Lid::None) needs_tagging = true;
            for (Utterance& u : corpus.utterances) {
                if (needs_tagging) u = tag_by_script(std::move(u), pair);
                u.kind = classify_kind(u);
            }
            if (!ing.splits.empty()) {
                corpus.splits = load_splits(ing.splits);
                corpus.validate_splits();
                manifest.add_input(ing.splits);
            }
            std::size_t mono1 = 0, mono2 = 0, cs = 0;
            for (const Utterance& u : corpus.utterances) {
                mono1 += u.kind == Kind::MonolingualL1;
                mono2 += u.kind == Kind::MonolingualL2;
                cs += u.kind == Kind::CodeSwitched;
            }
            OutputStager stager;
            save_corpus(corpus, stager.stage(ing.output));
            manifest.config = {{"pair", ing.pair}, {"script_tagged", needs_tagging}};
            manifest.outputs = {ing.output};
            manifest.save(stager.stage(ing.output + ".manifest.json"));
            stager.commit();
            std::cout << "utterances " << corpus.utterances.size() << " (" << pair.l1 << " "
                      << mono1 << ", " << pair.l2 << " " << mono2 << ", cs " << cs << ")\n";
        } else if (app.got_subcommand(annotate)) {
            LanguagePair pair = parse_pair(ann.common.pair);
            RunManifest manifest;
            manifest.command = "annotate";
            Corpus corpus = load_tagged_corpus(ann.common.corpus, pair);
            manifest.add_input(ann.common.corpus);
            Principle principle = principle_from_string(ann.principle);

            std::vector<const Utterance*> cs;
            for (const Utterance& u : corpus.utterances)
                if (u.kind == Kind::CodeSwitched) cs.push_back(&u);
            if (cs.empty()) throw compute_error("corpus has no code-switched utterances");

            std::vector<std::pair<std::string, MLVerdict>> verdicts(cs.size());
            std::vector<ScorePair> scores;
            double log_alpha = ann.log_alpha;

            if (principle == Principle::P11 || principle == Principle::Baseline) {
                auto results = parallel_map<MLVerdict>(cs.size(), ann.jobs, [&](std::size_t i) {
                    return principle == Principle::P11 ? determine_p11(*cs[i])
                                                       : determine_baseline(*cs[i]);
                });
                for (std::size_t i = 0; i < cs.size(); ++i)
                    verdicts[i] = {cs[i]->id, results[i]};
            } else if (principle == Principle::P2) {
                fs::path fw = ann.function_words.empty()
                                  ? default_data_dir / "function_words.tsv"
                                  : fs::path(ann.function_words);
                auto lexicons = load_function_lexicons(fw);
                manifest.add_input(fw);
                auto results = parallel_map<MLVerdict>(cs.size(), ann.jobs, [&](std::size_t i) {
                    return determine_p2(*cs[i], lexicons, pair);
                });
                for (std::size_t i = 0; i < cs.size(); ++i)
                    verdicts[i] = {cs[i]->id, results[i]};
            } else {
                if (ann.lexicon.empty() || ann.lm1.empty() || ann.lm2.empty())
                    throw input_error("p12 needs --lexicon, --lm1 and --lm2");
                TranslationLexicon lexicon = load_translation_lexicon(ann.lexicon, pair);
                NGramLM lm1 = NGramLM::load(ann.lm1);
                NGramLM lm2 = NGramLM::load(ann.lm2);
                manifest.add_input(ann.lexicon);
                manifest.add_input(ann.lm1);
                manifest.add_input(ann.lm2);
                if (lm1.language() != pair.l1 || lm2.language() != pair.l2)
                    throw input_error("model languages (" + lm1.language() + ", " +
                                      lm2.language() + ") do not match pair (" + pair.l1 +
                                      ", " + pair.l2 + ")");
                if (!ann.alpha_from.empty()) {
                    nlohmann::json aj = nlohmann::json::parse(read_file(ann.alpha_from));
                    log_alpha = aj.at("log_alpha").get<double>();
                    manifest.add_input(ann.alpha_from);
                }
                scores = parallel_map<ScorePair>(cs.size(), ann.jobs, [&](std::size_t i) {
                    return score_utterance(*cs[i], lexicon, lm1, lm2, lm1.tokenizer(),
                                           lm2.tokenizer());
                });
                for (std::size_t i = 0; i < cs.size(); ++i)
                    verdicts[i] = {cs[i]->id, decide(scores[i], log_alpha)};
            }

            std::vector<MLVerdict> plain;
            for (const auto& [id, v] : verdicts) plain.push_back(v);
            double cov = coverage(plain);

            OutputStager stager;
            {
                std::ofstream out(stager.stage(ann.output));
                save_verdicts(verdicts, pair, out);
            }
            if (!ann.scores.empty()) {
                if (principle != Principle::P12)
                    throw input_error("--scores is only produced by --principle p12");
                std::ofstream out(stager.stage(ann.scores));
                save_scores_csv(scores, out);
            }
            manifest.config = {{"pair", ann.common.pair},
                               {"principle", ann.principle},
                               {"jobs", ann.jobs}};
            if (principle == Principle::P12) manifest.config["log_alpha"] = log_alpha;
            manifest.outputs = stager.final_paths();
            manifest.save(stager.stage(ann.output + ".manifest.json"));
            stager.commit();
            std::cout << "annotated " << cs.size() << " cs utterances, coverage "
                      << fmt_fixed(100.0 * cov, 1) << "%\n";
        } else if (app.got_subcommand(train_lm)) {
            RunManifest manifest;
            manifest.command = "train-lm";
            Corpus corpus = load_with_splits(tlm.common, manifest);
            LanguagePair pair = corpus.pair;
            if (!pair.contains(tlm.lang))
                throw input_error("--lang " + tlm.lang + " is not in the pair");
            Kind kind = pair.lid_of(tlm.lang) == Lid::L1 ? Kind::MonolingualL1
                                                         : Kind::MonolingualL2;
            auto selected = select_utterances(corpus, tlm.common.split);
            std::vector<Utterance> mono = monolingual_side(selected, kind);
            if (mono.empty())
                throw compute_error("no monolingual " + tlm.lang + " utterances to train on");
            fs::path data_dir = tlm.data_dir.empty() ? default_data_dir : fs::path(tlm.data_dir);
            MorphemeTokenizer tokenizer =
                resolve_tokenizer(tlm.scheme, tlm.lang, data_dir, tlm.suffixes);
            if (!tlm.suffixes.empty()) manifest.add_input(tlm.suffixes);

            std::vector<MorphemeSequence> data;
            for (const Utterance& u : mono) data.push_back(tokenizer.tokenize(u.tokens));
            LmTrainOptions opt;
            opt.order = tlm.order;
            opt.min_count = tlm.min_count;
            opt.discount = tlm.discount;
            NGramLM lm = NGramLM::train(data, tlm.lang, tokenizer, opt);

            OutputStager stager;
            lm.save(stager.stage(tlm.output));
            manifest.config = {{"pair", tlm.common.pair},   {"lang", tlm.lang},
                               {"order", tlm.order},        {"min_count", tlm.min_count},
                               {"discount", tlm.discount},  {"scheme", tlm.scheme},
                               {"split", tlm.common.split}};
            manifest.outputs = {tlm.output};
            manifest.save(stager.stage(tlm.output + ".manifest.json"));
            stager.commit();
            std::cout << "trained " << tlm.lang << " order-" << tlm.order << " model on "
                      << mono.size() << " utterances, vocabulary "
                      << lm.vocabulary().size() << "\n";
        } else if (app.got_subcommand(ppl)) {
            RunManifest manifest;
            manifest.command = "perplexity";
            Corpus corpus = load_with_splits(pplo.common, manifest);
            NGramLM lm = NGramLM::load(pplo.lm);
            manifest.add_input(pplo.lm);
            Kind kind = corpus.pair.lid_of(lm.language()) == Lid::L1 ? Kind::MonolingualL1
                                                                     : Kind::MonolingualL2;
            auto selected = select_utterances(corpus, pplo.common.split);
            std::vector<Utterance> mono = monolingual_side(selected, kind);
            if (mono.empty())
                throw compute_error("no monolingual " + lm.language() + " utterances to score");
            std::vector<MorphemeSequence> seqs;
            for (const Utterance& u : mono) seqs.push_back(lm.tokenizer().tokenize(u.tokens));
            double value = lm.perplexity(seqs);
            std::cout << "perplexity " << fmt_fixed(value, 4) << " over " << mono.size()
                      << " utterances\n";
            if (!pplo.output.empty()) {
                OutputStager stager;
                nlohmann::ordered_json j;
                j["perplexity"] = value;
                j["utterances"] = mono.size();
                j["language"] = lm.language();
                write_text(stager.stage(pplo.output), j.dump(2) + "\n");
                manifest.config = {{"pair", pplo.common.pair}, {"split", pplo.common.split}};
                manifest.outputs = {pplo.output};
                manifest.save(stager.stage(pplo.output + ".manifest.json"));
                stager.commit();
            }
        } else if (app.got_subcommand(probe)) {
            RunManifest manifest;
            manifest.command = "wo-probe";
            Corpus corpus = load_with_splits(prb.common, manifest);
            NGramLM lm = NGramLM::load(prb.lm);
            manifest.add_input(prb.lm);
            Kind kind = corpus.pair.lid_of(lm.language()) == Lid::L1 ? Kind::MonolingualL1
                                                                     : Kind::MonolingualL2;
            auto selected = select_utterances(corpus, prb.common.split);
            std::vector<Utterance> mono = monolingual_side(selected, kind);
            std::vector<std::pair<std::string, bool>> results;
            std::size_t hits = 0;
            for (std::size_t i = 0; i < mono.size(); ++i) {
                if (mono[i].tokens.size() < 2) continue;
                MorphemeSequence seq = lm.tokenizer().tokenize(mono[i].tokens);
                ProbeResult r = word_order_probe(lm, seq, prb.max_permutations,
                                                 derive_seed(prb.seed, i));
                results.emplace_back(mono[i].id, r.original_best);
                hits += r.original_best;
            }
            if (results.empty()) throw compute_error("no utterances with at least two words");
            double accuracy = static_cast<double>(hits) / results.size();
            std::cout << "word-order accuracy " << fmt_fixed(100.0 * accuracy, 1) << "% over "
                      << results.size() << " utterances\n";
            if (!prb.output.empty()) {
                OutputStager stager;
                std::string csv = "id,original_best\n";
                for (const auto& [id, best] : results)
                    csv += csv_escape(id) + "," + (best ? "1" : "0") + "\n";
                write_text(stager.stage(prb.output), csv);
                manifest.config = {{"pair", prb.common.pair},
                                   {"max_permutations", prb.max_permutations}};
                manifest.seeds = {prb.seed};
                manifest.outputs = {prb.output};
                manifest.save(stager.stage(prb.output + ".manifest.json"));
                stager.commit();
            }
        } else if (app.got_subcommand(translate)) {
            LanguagePair pair = parse_pair(trn.common.pair);
            RunManifest manifest;
            manifest.command = "translate";
            Corpus corpus = load_tagged_corpus(trn.common.corpus, pair);
            manifest.add_input(trn.common.corpus);
            TranslationLexicon lexicon = load_translation_lexicon(trn.lexicon, pair);
            manifest.add_input(trn.lexicon);
            Corpus translated = corpus;
            long total_oov = 0;
            for (Utterance& u : translated.utterances) {
                TranslationResult r = translate_word_by_word(u, trn.target, lexicon);
                u.tokens = std::move(r.tokens);
                total_oov += r.oov_count;
            }
            OutputStager stager;
            save_corpus(translated, stager.stage(trn.output));
            manifest.config = {{"pair", trn.common.pair}, {"target", trn.target}};
            manifest.outputs = {trn.output};
            manifest.save(stager.stage(trn.output + ".manifest.json"));
            stager.commit();
            std::cout << "translated " << translated.utterances.size()
                      << " utterances toward " << trn.target << ", oov " << total_oov << "\n";
        } else if (app.got_subcommand(alpha)) {
            RunManifest manifest;
            manifest.command = "estimate-alpha";
            Corpus corpus = load_with_splits(alp.common, manifest);
            NGramLM lm1 = NGramLM::load(alp.lm1);
            NGramLM lm2 = NGramLM::load(alp.lm2);
            manifest.add_input(alp.lm1);
            manifest.add_input(alp.lm2);
            if (lm1.language() != corpus.pair.l1 || lm2.language() != corpus.pair.l2)
                throw input_error("model languages do not match the pair");
            auto selected = select_utterances(corpus, alp.common.split);
            std::vector<Utterance> mono1 = monolingual_side(selected, Kind::MonolingualL1);
            std::vector<Utterance> mono2 = monolingual_side(selected, Kind::MonolingualL2);
            AlphaEstimate est =
                estimate_alpha(mono1, mono2, lm1, lm2, lm1.tokenizer(), lm2.tokenizer(),
                               normalization_from_string(alp.normalization));
            OutputStager stager;
            nlohmann::ordered_json j;
            j["log_alpha"] = est.log_alpha;
            j["n1"] = est.n1;
            j["n2"] = est.n2;
            j["normalization"] = to_string(est.normalization);
            write_text(stager.stage(alp.output), j.dump(2) + "\n");
            manifest.config = {{"pair", alp.common.pair},
                               {"normalization", alp.normalization},
                               {"split", alp.common.split}};
            manifest.outputs = {alp.output};
            manifest.save(stager.stage(alp.output + ".manifest.json"));
            stager.commit();
            std::cout << "log_alpha " << fmt_double(est.log_alpha) << " (n1 " << est.n1
                      << ", n2 " << est.n2 << ")\n";
        } else if (app.got_subcommand(det)) {
            LanguagePair pair = parse_pair(deto.pair);
            RunManifest manifest;
            manifest.command = "det";
            auto scores = load_scores_csv(deto.scores);
            auto truth = load_truth_csv(deto.truth);
            manifest.add_input(deto.scores);
            manifest.add_input(deto.truth);
            std::vector<MlLabel> reference;
            for (const ScorePair& s : scores) {
                auto it = truth.find(s.id);
                if (it == truth.end())
                    throw input_error("no reference label for utterance " + s.id);
                reference.push_back(label_from_code(it->second, pair));
            }
            auto curve = det_curve(scores, reference);
            OutputStager stager;
            {
                std::ofstream out(stager.stage(deto.output));
                save_det_csv(curve, out);
            }
            manifest.config = {{"pair", deto.pair}};
            manifest.outputs = {deto.output};
            manifest.save(stager.stage(deto.output + ".manifest.json"));
            stager.commit();
            std::cout << "det curve with " << curve.size() << " points\n";
        } else if (app.got_subcommand(train_map) || app.got_subcommand(cv_map)) {
            bool is_cv = app.got_subcommand(cv_map);
            auto& common = is_cv ? cvo.common : tmo.common;
            auto& posteriors_path = is_cv ? cvo.posteriors : tmo.posteriors;
            auto& provenance_str = is_cv ? cvo.provenance : tmo.provenance;
            auto& verdicts_path = is_cv ? cvo.verdicts : tmo.verdicts;
            auto& output = is_cv ? cvo.output : tmo.output;
            MlpConfig config = is_cv ? cvo.config : tmo.config;

            LanguagePair pair = parse_pair(common.pair);
            RunManifest manifest;
            manifest.command = is_cv ? "cv-map" : "train-map";
            Corpus corpus = load_tagged_corpus(common.corpus, pair);
            manifest.add_input(common.corpus);
            auto posteriors = load_posteriors_csv(posteriors_path);
            manifest.add_input(posteriors_path);
            Provenance provenance = provenance_from_string(provenance_str);
            std::map<std::string, MLVerdict> verdicts;
            if (provenance != Provenance::MonolingualLid) {
                if (verdicts_path.empty())
                    throw input_error("principle provenance needs --verdicts");
                verdicts = verdict_map(load_verdicts(verdicts_path, pair));
                manifest.add_input(verdicts_path);
            }
            LabeledDataset dataset = assemble_dataset(corpus, posteriors, provenance, verdicts);

            OutputStager stager;
            if (is_cv) {
                CvResult cv = cross_validate(dataset, cvo.k, cvo.seed, config);
                nlohmann::ordered_json j;
                j["fold_f1"] = cv.fold_f1;
                j["mean_f1"] = cv.mean_f1;
                j["k"] = cvo.k;
                j["dataset_size"] = dataset.size();
                write_text(stager.stage(output), j.dump(2) + "\n");
                manifest.seeds = {cvo.seed};
                std::cout << "cv mean f1 " << fmt_fixed(cv.mean_f1, 4) << " over " << cvo.k
                          << " folds (n=" << dataset.size() << ")\n";
            } else {
                TrainResult result = train_mapping(dataset, config);
                result.model.save(stager.stage(output));
                manifest.seeds = {config.seed};
                std::cout << "trained mapping on " << dataset.size() << " samples, final loss "
                          << fmt_fixed(result.epoch_losses.back(), 6) << " after "
                          << result.epochs_run << " epochs\n";
            }
            manifest.config = {{"pair", common.pair},
                               {"provenance", provenance_str},
                               {"hidden", config.hidden},
                               {"epochs", config.epochs},
                               {"lr", config.learning_rate},
                               {"val_fraction", config.validation_fraction},
                               {"patience", config.patience}};
            if (is_cv) manifest.config["k"] = cvo.k;
            manifest.outputs = {output};
            manifest.save(stager.stage(output + ".manifest.json"));
            stager.commit();
        } else if (app.got_subcommand(predict_map)) {
            LanguagePair pair = parse_pair(pmo.pair);
            RunManifest manifest;
            manifest.command = "predict-map";
            MappingModel model = MappingModel::load(pmo.model);
            auto posteriors = load_posteriors_csv(pmo.posteriors);
            manifest.add_input(pmo.model);
            manifest.add_input(pmo.posteriors);
            OutputStager stager;
            std::string csv = "id,label,p_" + pair.l1 + ",p_" + pair.l2 + "\n";
            for (const auto& r : posteriors) {
                auto [label, probs] = model.predict(r.values);
                csv += csv_escape(r.id) + "," + label_code(label, pair) + "," +
                       fmt_double(probs[0]) + "," + fmt_double(probs[1]) + "\n";
            }
            write_text(stager.stage(pmo.output), csv);
            manifest.config = {{"pair", pmo.pair}};
            manifest.outputs = {pmo.output};
            manifest.save(stager.stage(pmo.output + ".manifest.json"));
            stager.commit();
            std::cout << "predicted " << posteriors.size() << " posteriors\n";
        } else if (app.got_subcommand(eval)) {
            LanguagePair pair = parse_pair(evo.pair);
            RunManifest manifest;
            manifest.command = "eval";
            if (!evo.names.empty() && evo.names.size() != evo.verdicts.size())
                throw input_error("--names must match --verdicts in count");
            std::map<std::string, std::map<std::string, std::string>> systems;
            for (std::size_t i = 0; i < evo.verdicts.size(); ++i) {
                std::string name = i < evo.names.size()
                                       ? evo.names[i]
                                       : fs::path(evo.verdicts[i]).stem().string();
                auto loaded = load_verdicts(evo.verdicts[i], pair);
                manifest.add_input(evo.verdicts[i]);
                std::map<std::string, std::string> labels;
                for (const auto& [id, v] : loaded) labels[id] = label_code(v.label, pair);
                systems[name] = std::move(labels);
            }

            OutputStager stager;
            fs::path dir = evo.output_dir;
            fs::create_directories(dir);

            std::string coverage_csv = "system,coverage,determined,total\n";
            for (const auto& [name, labels] : systems) {
                long det_count = 0;
                for (const auto& [id, l] : labels) det_count += l != "und";
                coverage_csv += csv_escape(name) + "," +
                                fmt_double(labels.empty() ? 0.0
                                                          : static_cast<double>(det_count) /
                                                                labels.size()) +
                                "," + std::to_string(det_count) + "," +
                                std::to_string(labels.size()) + "\n";
            }
            write_text(stager.stage(dir / "coverage.csv"), coverage_csv);

            if (systems.size() >= 2) {
                AgreementMatrix m = agreement_matrix(systems);
                write_text(stager.stage(dir / "agreement.csv"), m.to_csv());

                // unknown-as-class variant over the ids every system shares
                std::vector<std::string> ids;
                for (const auto& [id, l] : systems.begin()->second) {
                    bool everywhere = true;
                    for (const auto& [name, labels] : systems)
                        everywhere &= labels.count(id) > 0;
                    if (everywhere) ids.push_back(id);
                }
                std::string unk_csv = "system";
                for (const auto& [name, labels] : systems) unk_csv += "," + csv_escape(name);
                unk_csv += "\n";
                for (const auto& [name_a, labels_a] : systems) {
                    unk_csv += csv_escape(name_a);
                    for (const auto& [name_b, labels_b] : systems) {
                        std::vector<std::string> a, b;
                        for (const auto& id : ids) {
                            a.push_back(labels_a.at(id));
                            b.push_back(labels_b.at(id));
                        }
                        unk_csv += "," + (ids.size() < 2
                                              ? std::string()
                                              : fmt_double(mcc_with_unknown(
                                                    a, b, UnknownPolicy::PerSystem, "und",
                                                    name_a, name_b)));
                    }
                    unk_csv += "\n";
                }
                write_text(stager.stage(dir / "agreement_with_unknown.csv"), unk_csv);
            }

            if (!evo.truth.empty()) {
                auto truth = load_truth_csv(evo.truth);
                manifest.add_input(evo.truth);
                std::string truth_csv =
                    "system,n_covered,f1_covered,mcc_covered,f1_with_unknown,mcc_with_unknown\n";
                for (const auto& [name, labels] : systems) {
                    std::vector<std::string> pred_cov, truth_cov, pred_all, truth_all;
                    for (const auto& [id, label] : labels) {
                        auto it = truth.find(id);
                        if (it == truth.end()) continue;
                        pred_all.push_back(label);
                        truth_all.push_back(it->second);
                        if (label != "und") {
                            pred_cov.push_back(label);
                            truth_cov.push_back(it->second);
                        }
                    }
                    if (truth_all.size() < 2)
                        throw input_error("fewer than two utterances overlap the truth file");
                    truth_csv += csv_escape(name) + "," + std::to_string(pred_cov.size()) + "," +
                                 (pred_cov.size() >= 2
                                      ? fmt_double(f1_macro(pred_cov, truth_cov)) + "," +
                                            fmt_double(mcc(pred_cov, truth_cov))
                                      : ",") +
                                 "," + fmt_double(f1_macro(pred_all, truth_all)) + "," +
                                 fmt_double(mcc_with_unknown(pred_all, truth_all,
                                                             UnknownPolicy::PerSystem, "und",
                                                             name, "truth")) +
                                 "\n";
                }
                write_text(stager.stage(dir / "truth_metrics.csv"), truth_csv);
            }

            manifest.config = {{"pair", evo.pair}};
            manifest.outputs = stager.final_paths();
            manifest.save(stager.stage(dir / "manifest.json"));
            stager.commit();
            std::cout << "eval reports written to " << dir.string() << "\n";
        } else if (app.got_subcommand(report)) {
            LanguagePair pair = parse_pair(rpo.common.pair);
            RunManifest manifest;
            manifest.command = "report";
            Corpus corpus = load_tagged_corpus(rpo.common.corpus, pair);
            manifest.add_input(rpo.common.corpus);
            if (!rpo.names.empty() && rpo.names.size() != rpo.verdicts.size())
                throw input_error("--names must match --verdicts in count");
            std::map<std::string, std::map<std::string, MlLabel>> verdict_sets;
            for (std::size_t i = 0; i < rpo.verdicts.size(); ++i) {
                std::string name = i < rpo.names.size()
                                       ? rpo.names[i]
                                       : fs::path(rpo.verdicts[i]).stem().string();
                std::map<std::string, MlLabel> labels;
                for (const auto& [id, v] : load_verdicts(rpo.verdicts[i], pair))
                    labels[id] = v.label;
                manifest.add_input(rpo.verdicts[i]);
                verdict_sets[name] = std::move(labels);
            }
            DistributionReport dist = distribution_report(corpus, verdict_sets);
            double mi = m_index(corpus);

            OutputStager stager;
            fs::path dir = rpo.output_dir;
            fs::create_directories(dir);
            write_text(stager.stage(dir / "distributions.csv"), dist.to_csv());
            write_text(stager.stage(dir / "distributions.txt"), dist.to_text());
            nlohmann::ordered_json j;
            j["m_index"] = mi;
            write_text(stager.stage(dir / "report.json"), j.dump(2) + "\n");
            manifest.config = {{"pair", rpo.common.pair}};
            manifest.outputs = stager.final_paths();
            manifest.save(stager.stage(dir / "manifest.json"));
            stager.commit();
            std::cout << dist.to_text();
            std::cout << "m-index " << fmt_fixed(mi, 4) << "\n";
        } else if (app.got_subcommand(synth)) {
            WordOrderFamily family;
            if (syo.family == "distinct") family = WordOrderFamily::Distinct;
            else if (syo.family == "same") family = WordOrderFamily::Same;
            else throw input_error("--family must be distinct or same");
            auto [g1, g2] = make_grammar_pair(family, syo.grammar_seed, syo.lang1, syo.lang2);
            SynthSpec spec;
            spec.grammar1 = std::move(g1);
            spec.grammar2 = std::move(g2);
            spec.insertion_rate = syo.insertion_rate;
            spec.singleton_only = syo.singleton_only;
            spec.count = syo.count;
            spec.seed = syo.seed;
            spec.ml_p1 = syo.ml_p1;
            if (!syo.fixed_ml.empty()) {
                if (!spec.pair().contains(syo.fixed_ml))
                    throw input_error("--fixed-ml must be " + syo.lang1 + " or " + syo.lang2);
                spec.fixed_ml = spec.pair().lid_of(syo.fixed_ml) == Lid::L1 ? MlLabel::L1
                                                                            : MlLabel::L2;
            }
            SynthResult result = generate(spec);
            SynthLexicons lexicons = generate_lexicons(spec);

            RunManifest manifest;
            manifest.command = "synth";
            OutputStager stager;
            fs::path dir = syo.output_dir;
            fs::create_directories(dir);
            save_corpus(result.corpus, stager.stage(dir / "corpus.jsonl"));
            {
                std::ofstream out(stager.stage(dir / "lexicon.tsv"));
                save_translation_lexicon_tsv(lexicons.translation, out);
            }
            {
                std::ofstream out(stager.stage(dir / "function_words.tsv"));
                save_function_lexicons_tsv(lexicons.function_words, out);
            }
            {
                std::ofstream out(stager.stage(dir / "truth.csv"));
                save_truth_csv(result.truth, result.corpus.pair, out);
            }
            manifest.config = {{"family", syo.family},
                               {"utterances", syo.count},
                               {"insertion_rate", syo.insertion_rate},
                               {"singleton_only", syo.singleton_only},
                               {"ml_p1", syo.ml_p1},
                               {"fixed_ml", syo.fixed_ml},
                               {"lang1", syo.lang1},
                               {"lang2", syo.lang2}};
            manifest.seeds = {syo.seed, syo.grammar_seed};
            manifest.outputs = stager.final_paths();
            manifest.save(stager.stage(dir / "manifest.json"));
            stager.commit();
            std::size_t cs = 0;
            for (const Utterance& u : result.corpus.utterances)
                cs += u.kind == Kind::CodeSwitched;
            std::cout << "generated " << result.corpus.utterances.size() << " utterances ("
                      << cs << " code-switched) in " << dir.string() << "\n";
        }
        return 0;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const compute_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
