#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlid/corpus.hpp"
#include "mlid/metrics.hpp"
#include "mlid/util.hpp"
#include "mlid/verdict.hpp"

namespace mlid {

// One upstream language-identification posterior vector.
struct PosteriorRecord {
    std::string id;
    std::vector<double> values;

    void validate() const {
        double sum = 0.0;
        for (double v : values) {
            if (!(v >= 0.0)) throw input_error("posterior " + id + " has a negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw input_error("posterior " + id + " does not sum to 1 (sum=" + fmt_double(sum) +
                              ")");
    }
};

enum class Provenance : std::uint8_t { MonolingualLid, P11, P12, P2 };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::MonolingualLid: return "mono";
        case Provenance::P11: return "p11";
        case Provenance::P12: return "p12";
        case Provenance::P2: return "p2";
    }
    return "?";
}

inline Provenance provenance_from_string(std::string_view s) {
    if (s == "mono") return Provenance::MonolingualLid;
    if (s == "p11") return Provenance::P11;
    if (s == "p12") return Provenance::P12;
    if (s == "p2") return Provenance::P2;
    throw input_error("unknown provenance: " + std::string(s));
}

struct LabeledDataset {
    Provenance provenance = Provenance::MonolingualLid;
    std::size_t dim = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<MlLabel> labels;  // L1 or L2 only
    std::vector<std::string> ids;

    std::size_t size() const { return inputs.size(); }
};

// CSV with header id,p_0..p_{D-1}.
inline std::vector<PosteriorRecord> load_posteriors_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open posteriors file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw input_error("empty posteriors file: " + path.string());
    auto header = split(trim(line), ',');
    if (header.size() < 2 || header[0] != "id")
        throw input_error("posteriors file needs header id,p_0,...: " + path.string());
    for (std::size_t i = 1; i < header.size(); ++i)
        if (header[i] != "p_" + std::to_string(i - 1))
            throw input_error("posteriors header column " + std::to_string(i) +
                              " should be p_" + std::to_string(i - 1));
    const std::size_t dim = header.size() - 1;
    std::vector<PosteriorRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != dim + 1)
            throw input_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected " + std::to_string(dim + 1) + " columns");
        PosteriorRecord r;
        r.id = std::string(cols[0]);
        for (std::size_t i = 1; i < cols.size(); ++i) {
            try {
                r.values.push_back(std::stod(std::string(cols[i])));
            } catch (const std::exception&) {
                throw input_error(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed posterior value");
            }
        }
        r.validate();
        records.push_back(std::move(r));
    }
    return records;
}

inline void save_posteriors_csv(const std::vector<PosteriorRecord>& records, std::ostream& out) {
    if (records.empty()) throw input_error("no posterior records to save");
    out << "id";
    for (std::size_t i = 0; i < records.front().values.size(); ++i) out << ",p_" << i;
    out << "\n";
    for (const auto& r : records) {
        out << csv_escape(r.id);
        for (double v : r.values) out << "," << fmt_double(v);
        out << "\n";
    }
}

// Pairs posterior vectors with binary labels. Monolingual provenance keeps
// monolingual utterances labelled by their language; principle provenances
// keep code-switched utterances whose pseudo-label is determined.
inline LabeledDataset assemble_dataset(const Corpus& corpus,
                                       const std::vector<PosteriorRecord>& posteriors,
                                       Provenance provenance,
                                       const std::map<std::string, MLVerdict>& verdicts = {}) {
    std::map<std::string, const PosteriorRecord*> by_id;
    for (const auto& r : posteriors) by_id[r.id] = &r;

    LabeledDataset ds;
    ds.provenance = provenance;
    auto add = [&](const std::string& id, MlLabel label) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw input_error("no posterior record for utterance " + id);
        if (ds.inputs.empty()) ds.dim = it->second->values.size();
        if (it->second->values.size() != ds.dim)
            throw input_error("posterior dimension mismatch at " + id);
        ds.inputs.push_back(it->second->values);
        ds.labels.push_back(label);
        ds.ids.push_back(id);
    };
    for (const Utterance& u : corpus.utterances) {
        if (provenance == Provenance::MonolingualLid) {
            if (u.kind == Kind::MonolingualL1) add(u.id, MlLabel::L1);
            else if (u.kind == Kind::MonolingualL2) add(u.id, MlLabel::L2);
        } else {
            if (u.kind != Kind::CodeSwitched) continue;
            auto it = verdicts.find(u.id);
            if (it == verdicts.end() || !it->second.determined()) continue;
            add(u.id, it->second.label);
        }
    }
    return ds;
}

struct MlpConfig {
    int hidden = 32;
    int epochs = 500;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    double validation_fraction = 0.0;  // 0 disables early stopping
    int patience = 10;
};

// Fully connected D -> H -> 2 classifier with a rectifier hidden layer and
// softmax output, trained by full-batch gradient descent on the mean
// negative log-likelihood with inverse-frequency sample weights.
class MappingModel {
  public:
    MappingModel() = default;

    MappingModel(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed)
        : input_dim_(input_dim), hidden_dim_(hidden_dim), seed_(seed) {
        w1_.assign(hidden_dim_ * input_dim_, 0.0);
        b1_.assign(hidden_dim_, 0.0);
        w2_.assign(2 * hidden_dim_, 0.0);
        b2_.assign(2, 0.0);
        std::mt19937_64 rng(seed);
        init_uniform(w1_, input_dim_, hidden_dim_, rng);
        init_uniform(w2_, hidden_dim_, 2, rng);
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_dim() const { return hidden_dim_; }
    std::uint64_t seed() const { return seed_; }

    std::array<double, 2> probabilities(const std::vector<double>& x) const {
        if (x.size() != input_dim_)
            throw input_error("posterior dimension " + std::to_string(x.size()) +
                              " does not match model input " + std::to_string(input_dim_));
        std::vector<double> a1(hidden_dim_);
        forward_hidden(x, a1);
        std::array<double, 2> z2;
        forward_output(a1, z2);
        return softmax(z2);
    }

    std::pair<MlLabel, std::array<double, 2>> predict(const std::vector<double>& x) const {
        auto p = probabilities(x);
        return {p[0] >= p[1] ? MlLabel::L1 : MlLabel::L2, p};
    }

    // parameter access for training and checking, in a fixed order:
    // w1, b1, w2, b2
    std::vector<double*> parameters() {
        std::vector<double*> out;
        for (auto* vec : {&w1_, &b1_, &w2_, &b2_})
            for (double& v : *vec) out.push_back(&v);
        return out;
    }

    std::size_t parameter_count() const {
        return w1_.size() + b1_.size() + w2_.size() + b2_.size();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["format"] = "mlid-mapping";
        j["version"] = 1;
        j["input_dim"] = input_dim_;
        j["hidden_dim"] = hidden_dim_;
        j["seed"] = seed_;
        j["w1"] = w1_;
        j["b1"] = b1_;
        j["w2"] = w2_;
        j["b2"] = b2_;
        return j;
    }

    static MappingModel from_json(const nlohmann::json& j) {
        if (j.value("format", "") != "mlid-mapping" || j.value("version", 0) != 1)
            throw input_error("not an mlid mapping model file");
        MappingModel m;
        m.input_dim_ = j.at("input_dim").get<std::size_t>();
        m.hidden_dim_ = j.at("hidden_dim").get<std::size_t>();
        m.seed_ = j.at("seed").get<std::uint64_t>();
        m.w1_ = j.at("w1").get<std::vector<double>>();
        m.b1_ = j.at("b1").get<std::vector<double>>();
        m.w2_ = j.at("w2").get<std::vector<double>>();
        m.b2_ = j.at("b2").get<std::vector<double>>();
        if (m.w1_.size() != m.hidden_dim_ * m.input_dim_ || m.b1_.size() != m.hidden_dim_ ||
            m.w2_.size() != 2 * m.hidden_dim_ || m.b2_.size() != 2)
            throw input_error("mapping model file has inconsistent dimensions");
        return m;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw input_error("cannot write model file: " + path.string());
        out << to_json().dump(2) << "\n";
    }

    static MappingModel load(const std::filesystem::path& path) {
        try {
            return from_json(nlohmann::json::parse(read_file(path)));
        } catch (const nlohmann::json::exception& e) {
            throw input_error("invalid mapping model file " + path.string() + ": " + e.what());
        }
    }

  private:
    friend struct MlpTrainer;

    static std::array<double, 2> softmax(const std::array<double, 2>& z) {
        double m = std::max(z[0], z[1]);
        double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
        double sum = e0 + e1;
        return {e0 / sum, e1 / sum};
    }

    void forward_hidden(const std::vector<double>& x, std::vector<double>& a1) const {
        for (std::size_t j = 0; j < hidden_dim_; ++j) {
            double z = b1_[j];
            const double* w = &w1_[j * input_dim_];
            for (std::size_t i = 0; i < input_dim_; ++i) z += w[i] * x[i];
            a1[j] = z > 0.0 ? z : 0.0;
        }
    }

    void forward_output(const std::vector<double>& a1, std::array<double, 2>& z2) const {
        for (std::size_t c = 0; c < 2; ++c) {
            double z = b2_[c];
            const double* w = &w2_[c * hidden_dim_];
            for (std::size_t j = 0; j < hidden_dim_; ++j) z += w[j] * a1[j];
            z2[c] = z;
        }
    }

    static void init_uniform(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out,
                             std::mt19937_64& rng) {
        double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-r, r);
        for (double& v : w) v = dist(rng);
    }

    std::size_t input_dim_ = 0;
    std::size_t hidden_dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> w1_, b1_, w2_, b2_;
};

struct MlpTrainer {
    // Inverse-frequency weights: w_c = N / (2 * N_c), so a balanced batch
    // gets unit weights.
    static std::array<double, 2> class_weights(const std::vector<MlLabel>& labels) {
        double n1 = 0, n2 = 0;
        for (MlLabel l : labels) (l == MlLabel::L1 ? n1 : n2) += 1.0;
        double n = n1 + n2;
        return {n1 > 0 ? n / (2.0 * n1) : 0.0, n2 > 0 ? n / (2.0 * n2) : 0.0};
    }

    static double batch_loss(const MappingModel& m, const std::vector<std::vector<double>>& x,
                             const std::vector<MlLabel>& y,
                             const std::array<double, 2>& weights) {
        double loss = 0.0;
        for (std::size_t s = 0; s < x.size(); ++s) {
            auto p = m.probabilities(x[s]);
            std::size_t cls = y[s] == MlLabel::L1 ? 0 : 1;
            loss += weights[cls] * -std::log(std::max(p[cls], 1e-300));
        }
        return loss / static_cast<double>(x.size());
    }

    // Analytic gradient of batch_loss in the parameters() order.
    static std::vector<double> batch_gradient(const MappingModel& m,
                                              const std::vector<std::vector<double>>& x,
                                              const std::vector<MlLabel>& y,
                                              const std::array<double, 2>& weights) {
        const std::size_t d = m.input_dim_, h = m.hidden_dim_;
        std::vector<double> gw1(h * d, 0.0), gb1(h, 0.0), gw2(2 * h, 0.0), gb2(2, 0.0);
        std::vector<double> a1(h), z1(h);
        const double inv_n = 1.0 / static_cast<double>(x.size());
        for (std::size_t s = 0; s < x.size(); ++s) {
            for (std::size_t j = 0; j < h; ++j) {
                double z = m.b1_[j];
                const double* w = &m.w1_[j * d];
                for (std::size_t i = 0; i < d; ++i) z += w[i] * x[s][i];
                z1[j] = z;
                a1[j] = z > 0.0 ? z : 0.0;
            }
            std::array<double, 2> z2;
            m.forward_output(a1, z2);
            auto p = MappingModel::softmax(z2);
            std::size_t cls = y[s] == MlLabel::L1 ? 0 : 1;
            std::array<double, 2> dz2;
            for (std::size_t c = 0; c < 2; ++c)
                dz2[c] = weights[cls] * (p[c] - (c == cls ? 1.0 : 0.0)) * inv_n;
            for (std::size_t c = 0; c < 2; ++c) {
                gb2[c] += dz2[c];
                for (std::size_t j = 0; j < h; ++j) gw2[c * h + j] += dz2[c] * a1[j];
            }
            for (std::size_t j = 0; j < h; ++j) {
                if (z1[j] <= 0.0) continue;
                double da = m.w2_[j] * dz2[0] + m.w2_[h + j] * dz2[1];
                gb1[j] += da;
                for (std::size_t i = 0; i < d; ++i) gw1[j * d + i] += da * x[s][i];
            }
        }
        std::vector<double> grad;
        grad.reserve(m.parameter_count());
        for (auto* vec : {&gw1, &gb1, &gw2, &gb2}) grad.insert(grad.end(), vec->begin(), vec->end());
        return grad;
    }
};

struct TrainResult {
    MappingModel model;
    std::vector<double> epoch_losses;  // training loss after each epoch
    int epochs_run = 0;
};

inline TrainResult train_mapping(const LabeledDataset& dataset, const MlpConfig& config) {
    if (dataset.size() < 2) throw compute_error("training needs at least two samples");
    bool has_l1 = false, has_l2 = false;
    for (MlLabel l : dataset.labels) (l == MlLabel::L1 ? has_l1 : has_l2) = true;
    if (!has_l1 || !has_l2)
        throw compute_error("training set contains a single class");
    if (config.hidden < 1 || config.epochs < 1 || config.learning_rate <= 0.0)
        throw input_error("invalid training configuration");

    // Optional held-out slice for early stopping, stratified and seeded.
    std::vector<std::size_t> train_idx, val_idx;
    if (config.validation_fraction > 0.0) {
        std::vector<std::size_t> by_class[2];
        for (std::size_t i = 0; i < dataset.size(); ++i)
            by_class[dataset.labels[i] == MlLabel::L1 ? 0 : 1].push_back(i);
        std::mt19937_64 rng(derive_seed(config.seed, 0x5a11));
        for (auto& cls : by_class) {
            std::shuffle(cls.begin(), cls.end(), rng);
            std::size_t held = static_cast<std::size_t>(
                std::floor(config.validation_fraction * static_cast<double>(cls.size())));
            for (std::size_t i = 0; i < cls.size(); ++i)
                (i < held ? val_idx : train_idx).push_back(cls[i]);
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    } else {
        train_idx.resize(dataset.size());
        std::iota(train_idx.begin(), train_idx.end(), 0);
    }
    auto gather = [&](const std::vector<std::size_t>& idx) {
        std::pair<std::vector<std::vector<double>>, std::vector<MlLabel>> out;
        for (std::size_t i : idx) {
            out.first.push_back(dataset.inputs[i]);
            out.second.push_back(dataset.labels[i]);
        }
        return out;
    };
    auto [x, y] = gather(train_idx);
    auto [xv, yv] = gather(val_idx);
    auto weights = MlpTrainer::class_weights(y);

    TrainResult result;
    result.model = MappingModel(dataset.dim, static_cast<std::size_t>(config.hidden),
                                config.seed);
    MappingModel& model = result.model;
    double prev_val = std::numeric_limits<double>::infinity();
    int rising = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto grad = MlpTrainer::batch_gradient(model, x, y, weights);
        auto params = model.parameters();
        for (std::size_t p = 0; p < params.size(); ++p)
            *params[p] -= config.learning_rate * grad[p];
        double loss = MlpTrainer::batch_loss(model, x, y, weights);
        if (!std::isfinite(loss)) throw compute_error("training loss became non-finite");
        result.epoch_losses.push_back(loss);
        result.epochs_run = epoch + 1;
        if (!xv.empty()) {
            double val = MlpTrainer::batch_loss(model, xv, yv, weights);
            rising = val > prev_val ? rising + 1 : 0;
            prev_val = val;
            if (rising >= config.patience) break;
        }
    }
    return result;
}

// Largest relative disagreement between the analytic gradient and central
// finite differences (step 1e-5) over all parameters.
inline double gradient_check(MappingModel model, const std::vector<std::vector<double>>& x,
                             const std::vector<MlLabel>& y) {
    if (x.empty() || x.size() != y.size()) throw input_error("gradient check needs a batch");
    auto weights = MlpTrainer::class_weights(y);
    auto analytic = MlpTrainer::batch_gradient(model, x, y, weights);
    auto params = model.parameters();
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        double saved = *params[p];
        *params[p] = saved + h;
        double up = MlpTrainer::batch_loss(model, x, y, weights);
        *params[p] = saved - h;
        double down = MlpTrainer::batch_loss(model, x, y, weights);
        *params[p] = saved;
        double numeric = (up - down) / (2.0 * h);
        double rel = std::abs(analytic[p] - numeric) /
                     std::max(std::abs(analytic[p]) + std::abs(numeric), 1e-4);
        worst = std::max(worst, rel);
    }
    return worst;
}

struct CvResult {
    std::vector<double> fold_f1;
    double mean_f1 = 0.0;
};

// Stratified k-fold cross validation reporting macro F1 per fold.
inline CvResult cross_validate(const LabeledDataset& dataset, int k, std::uint64_t seed,
                               MlpConfig config = {}) {
    if (k < 2) throw input_error("cross validation needs k >= 2");
    if (static_cast<std::size_t>(k) > dataset.size())
        throw input_error("cross validation k exceeds dataset size");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[dataset.labels[i] == MlLabel::L1 ? 0 : 1].push_back(i);
    std::mt19937_64 rng(derive_seed(seed, 0xcf01d));
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (auto& cls : by_class) {
        std::shuffle(cls.begin(), cls.end(), rng);
        for (std::size_t i = 0; i < cls.size(); ++i) folds[i % k].push_back(cls[i]);
    }
    for (const auto& fold : folds) {
        bool l1 = false, l2 = false;
        for (std::size_t i : fold) (dataset.labels[i] == MlLabel::L1 ? l1 : l2) = true;
        if (!l1 || !l2)
            throw compute_error("a stratified fold lacks one of the classes; lower k");
    }

    CvResult result;
    for (int f = 0; f < k; ++f) {
        LabeledDataset train;
        train.provenance = dataset.provenance;
        train.dim = dataset.dim;
        std::vector<std::string> pred, truth;
        for (int g = 0; g < k; ++g) {
            if (g == f) continue;
            for (std::size_t i : folds[g]) {
                train.inputs.push_back(dataset.inputs[i]);
                train.labels.push_back(dataset.labels[i]);
            }
        }
        MlpConfig fold_config = config;
        fold_config.seed = derive_seed(seed, static_cast<std::uint64_t>(f) + 1);
        MappingModel model = train_mapping(train, fold_config).model;
        for (std::size_t i : folds[f]) {
            pred.push_back(model.predict(dataset.inputs[i]).first == MlLabel::L1 ? "L1" : "L2");
            truth.push_back(dataset.labels[i] == MlLabel::L1 ? "L1" : "L2");
        }
        result.fold_f1.push_back(f1_macro(pred, truth));
    }
    result.mean_f1 = std::accumulate(result.fold_f1.begin(), result.fold_f1.end(), 0.0) /
                     static_cast<double>(k);
    return result;
}

}  // namespace mlid
