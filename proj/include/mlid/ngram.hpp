#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mlid/morpheme.hpp"
#include "mlid/util.hpp"

namespace mlid {

namespace detail {

using Gram = std::vector<int>;

struct GramHash {
    std::size_t operator()(const Gram& g) const {
        std::uint64_t h = 1469598103934665603ull;
        for (int v : g) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

using GramCounts = std::unordered_map<Gram, long, GramHash>;

}  // namespace detail

struct LmTrainOptions {
    int order = 3;
    int min_count = 2;     // morphemes rarer than this map to <unk>
    double discount = 0.75;
};

// Interpolated Kneser-Ney n-gram model over morphemes. Utterances are padded
// with (order-1) begin symbols and one end symbol; the end symbol is scored,
// the begin symbol never is. Lower orders use continuation counts; the
// unigram interpolates with the uniform distribution so every vocabulary
// item keeps positive mass. All log probabilities are natural logs.
class NGramLM {
  public:
    static constexpr int kBos = 0;
    static constexpr int kEos = 1;
    static constexpr int kUnk = 2;

    NGramLM() = default;

    static NGramLM train(const std::vector<MorphemeSequence>& data, std::string language,
                         MorphemeTokenizer tokenizer, const LmTrainOptions& options = {}) {
        if (data.empty()) throw input_error("cannot train a language model on no utterances");
        if (options.order < 1) throw input_error("language model order must be >= 1");
        if (options.discount <= 0.0 || options.discount >= 1.0)
            throw input_error("discount must lie in (0, 1)");

        NGramLM lm;
        lm.language_ = std::move(language);
        lm.tokenizer_ = std::move(tokenizer);
        lm.order_ = options.order;
        lm.discount_ = options.discount;
        lm.min_count_ = options.min_count;

        std::map<std::string, long> raw;
        for (const auto& seq : data)
            for (const auto& m : seq.morphemes) ++raw[m];
        lm.id_to_str_ = {"<s>", "</s>", "<unk>"};
        for (const auto& [m, c] : raw)
            if (c >= options.min_count) lm.id_to_str_.push_back(m);
        for (std::size_t i = 0; i < lm.id_to_str_.size(); ++i)
            lm.str_to_id_[lm.id_to_str_[i]] = static_cast<int>(i);

        lm.counts_.assign(lm.order_ + 1, {});
        for (const auto& seq : data) {
            std::vector<int> padded = lm.pad(lm.map_ids(seq.morphemes));
            lm.accumulate(padded);
        }
        lm.build_derived();
        return lm;
    }

    const std::string& language() const { return language_; }
    int order() const { return order_; }
    double discount() const { return discount_; }
    int min_count() const { return min_count_; }
    const MorphemeTokenizer& tokenizer() const { return tokenizer_; }

    // Prediction vocabulary: kept morphemes plus <unk> and </s>. The begin
    // symbol is context-only and carries no probability mass.
    std::vector<std::string> vocabulary() const {
        std::vector<std::string> v(id_to_str_.begin() + 1, id_to_str_.end());
        return v;
    }

    // p(w | history), history given oldest-first; both mapped through the
    // vocabulary (unknowns become <unk>). Only the last order-1 history
    // items matter.
    double conditional(const std::string& w, const std::vector<std::string>& history) const {
        std::vector<int> ctx(static_cast<std::size_t>(order_ - 1), kBos);
        if (!ctx.empty())
            for (int h : map_ids(history)) {
                ctx.erase(ctx.begin());
                ctx.push_back(h);
            }
        return prob(order_, ctx.data(), to_id(w));
    }

    // Sum of log conditionals over the sequence plus the end symbol.
    double log_prob(const MorphemeSequence& seq) const {
        std::vector<int> padded = pad(map_ids(seq.morphemes));
        double total = 0.0;
        for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < padded.size(); ++p)
            total += std::log(prob(order_, padded.data() + p - (order_ - 1), padded[p]));
        return total;
    }

    // Number of scored events of a sequence (morphemes plus end symbol).
    static std::size_t scored_events(const MorphemeSequence& seq) { return seq.size() + 1; }

    double perplexity(const std::vector<MorphemeSequence>& seqs) const {
        double total_lp = 0.0;
        std::size_t events = 0;
        for (const auto& seq : seqs) {
            total_lp += log_prob(seq);
            events += scored_events(seq);
        }
        if (events == 0) throw compute_error("perplexity over zero morphemes");
        return std::exp(-total_lp / static_cast<double>(events));
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw input_error("cannot write model file: " + path.string());
        out << to_json().dump(2) << "\n";
    }

    static NGramLM load(const std::filesystem::path& path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw input_error("invalid model file " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["format"] = "mlid-ngram";
        j["version"] = 1;
        j["language"] = language_;
        j["order"] = order_;
        j["discount"] = discount_;
        j["min_count"] = min_count_;
        j["tokenizer"] = tokenizer_.to_json();
        j["vocab"] = std::vector<std::string>(id_to_str_.begin() + 3, id_to_str_.end());
        auto grams = nlohmann::ordered_json::array();
        for (int k = 1; k <= order_; ++k) {
            std::vector<std::pair<std::vector<std::string>, long>> rows;
            for (const auto& [gram, count] : counts_[k]) {
                std::vector<std::string> words;
                for (int id : gram) words.push_back(id_to_str_[id]);
                rows.emplace_back(std::move(words), count);
            }
            std::sort(rows.begin(), rows.end());
            auto jk = nlohmann::ordered_json::array();
            for (auto& [words, count] : rows) jk.push_back({words, count});
            grams.push_back({{"order", k}, {"grams", std::move(jk)}});
        }
        j["counts"] = std::move(grams);
        return j;
    }

    static NGramLM from_json(const nlohmann::json& j) {
        if (j.value("format", "") != "mlid-ngram" || j.value("version", 0) != 1)
            throw input_error("not an mlid n-gram model file");
        NGramLM lm;
        lm.language_ = j.at("language").get<std::string>();
        lm.order_ = j.at("order").get<int>();
        lm.discount_ = j.at("discount").get<double>();
        lm.min_count_ = j.at("min_count").get<int>();
        lm.tokenizer_ = MorphemeTokenizer::from_json(j.at("tokenizer"));
        lm.id_to_str_ = {"<s>", "</s>", "<unk>"};
        for (const auto& w : j.at("vocab")) lm.id_to_str_.push_back(w.get<std::string>());
        for (std::size_t i = 0; i < lm.id_to_str_.size(); ++i)
            lm.str_to_id_[lm.id_to_str_[i]] = static_cast<int>(i);
        lm.counts_.assign(lm.order_ + 1, {});
        for (const auto& level : j.at("counts")) {
            int k = level.at("order").get<int>();
            if (k < 1 || k > lm.order_) throw input_error("model counts at invalid order");
            for (const auto& row : level.at("grams")) {
                detail::Gram gram;
                for (const auto& w : row.at(0)) {
                    auto it = lm.str_to_id_.find(w.get<std::string>());
                    if (it == lm.str_to_id_.end())
                        throw input_error("model n-gram over unknown symbol");
                    gram.push_back(it->second);
                }
                lm.counts_[k][gram] = row.at(1).get<long>();
            }
        }
        lm.build_derived();
        return lm;
    }

  private:
    int to_id(const std::string& w) const {
        auto it = str_to_id_.find(w);
        return it == str_to_id_.end() ? kUnk : it->second;
    }

    std::vector<int> map_ids(const std::vector<std::string>& words) const {
        std::vector<int> ids;
        ids.reserve(words.size());
        for (const auto& w : words) ids.push_back(to_id(w));
        return ids;
    }

    std::vector<int> pad(std::vector<int> ids) const {
        std::vector<int> padded(static_cast<std::size_t>(order_ - 1), kBos);
        padded.insert(padded.end(), ids.begin(), ids.end());
        padded.push_back(kEos);
        return padded;
    }

    void accumulate(const std::vector<int>& padded) {
        for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < padded.size(); ++p)
            for (int k = 1; k <= order_; ++k)
                ++counts_[k][detail::Gram(padded.begin() + p - (k - 1), padded.begin() + p + 1)];
    }

    void build_derived() {
        ctx_total_.clear();
        ctx_types_.clear();
        cont_.assign(order_, {});
        cont_ctx_total_.assign(order_, {});
        cont_ctx_types_.assign(order_, {});
        if (order_ >= 2) {
            for (const auto& [gram, count] : counts_[order_]) {
                detail::Gram hist(gram.begin(), gram.end() - 1);
                ctx_total_[hist] += count;
                ++ctx_types_[hist];
            }
            for (int k = 1; k < order_; ++k)
                for (const auto& [gram, count] : counts_[k + 1])
                    ++cont_[k][detail::Gram(gram.begin() + 1, gram.end())];
            for (int k = 2; k < order_; ++k) {
                for (const auto& [gram, cc] : cont_[k]) {
                    detail::Gram hist(gram.begin(), gram.end() - 1);
                    cont_ctx_total_[k][hist] += cc;
                    ++cont_ctx_types_[k][hist];
                }
            }
            uni_total_ = 0;
            uni_types_ = 0;
            for (const auto& [gram, cc] : cont_[1]) {
                uni_total_ += cc;
                ++uni_types_;
            }
        } else {
            uni_total_ = 0;
            uni_types_ = 0;
            for (const auto& [gram, count] : counts_[1]) {
                uni_total_ += count;
                ++uni_types_;
            }
        }
    }

    double vocab_size() const { return static_cast<double>(id_to_str_.size() - 1); }

    template <typename Map>
    static long lookup(const Map& map, const detail::Gram& key) {
        auto it = map.find(key);
        return it == map.end() ? 0 : it->second;
    }

    // hist points at k-1 context ids, most recent last.
    double prob(int k, const int* hist, int w) const {
        const double d = discount_;
        if (k == 1) {
            long num, total, types;
            if (order_ == 1) {
                num = lookup(counts_[1], {w});
                total = uni_total_;
                types = uni_types_;
            } else {
                num = lookup(cont_[1], {w});
                total = uni_total_;
                types = uni_types_;
            }
            if (total == 0) return 1.0 / vocab_size();
            return std::max(static_cast<double>(num) - d, 0.0) / total +
                   (d * types / total) * (1.0 / vocab_size());
        }
        detail::Gram hist_gram(hist, hist + (k - 1));
        long num, denom, types;
        if (k == order_) {
            denom = lookup(ctx_total_, hist_gram);
            if (denom == 0) return prob(k - 1, hist + 1, w);
            detail::Gram full = hist_gram;
            full.push_back(w);
            num = lookup(counts_[order_], full);
            types = lookup(ctx_types_, hist_gram);
        } else {
            denom = lookup(cont_ctx_total_[k], hist_gram);
            if (denom == 0) return prob(k - 1, hist + 1, w);
            detail::Gram full = hist_gram;
            full.push_back(w);
            num = lookup(cont_[k], full);
            types = lookup(cont_ctx_types_[k], hist_gram);
        }
        return std::max(static_cast<double>(num) - d, 0.0) / denom +
               (d * types / denom) * prob(k - 1, hist + 1, w);
    }

    std::string language_;
    MorphemeTokenizer tokenizer_;
    int order_ = 3;
    double discount_ = 0.75;
    int min_count_ = 2;
    std::vector<std::string> id_to_str_;
    std::unordered_map<std::string, int> str_to_id_;
    std::vector<detail::GramCounts> counts_;  // index = gram length

    // derived at train/load time
    detail::GramCounts ctx_total_, ctx_types_;
    std::vector<detail::GramCounts> cont_, cont_ctx_total_, cont_ctx_types_;
    long uni_total_ = 0;
    long uni_types_ = 0;
};

struct ProbeResult {
    std::vector<std::size_t> token_order;  // group permutation, best first
    MorphemeSequence sequence;
    double log_prob = 0.0;
    bool original_best = true;
};

namespace detail {

inline MorphemeSequence reorder_groups(const MorphemeSequence& seq,
                                       const std::vector<std::vector<std::size_t>>& groups,
                                       const std::vector<std::size_t>& order) {
    MorphemeSequence out;
    for (std::size_t g : order)
        for (std::size_t m : groups[g]) {
            out.morphemes.push_back(seq.morphemes[m]);
            out.source_token_spans.push_back(seq.source_token_spans[m]);
        }
    return out;
}

}  // namespace detail

// Word-order probe: scores the sequence against up to `max_permutations`
// distinct word permutations of itself and returns the best-scoring order.
// Permutations move whole tokens, i.e. morphemes travel with the word they
// came from. Ties go to the original order.
inline ProbeResult word_order_probe(const NGramLM& lm, const MorphemeSequence& seq,
                                    int max_permutations = 20, std::uint64_t seed = 0) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t m = 0; m < seq.size(); ++m) {
        if (groups.empty() || seq.source_token_spans[m] != seq.source_token_spans[groups.back().front()])
            groups.emplace_back();
        groups.back().push_back(m);
    }
    if (groups.size() < 2) throw input_error("word-order probe needs at least two words");

    std::vector<std::size_t> original(groups.size());
    std::iota(original.begin(), original.end(), 0);

    std::vector<std::vector<std::size_t>> candidates;
    double total_perms = 1.0;
    for (std::size_t i = 2; i <= groups.size() && total_perms <= 1e6; ++i) total_perms *= i;
    if (total_perms - 1.0 <= max_permutations) {
        std::vector<std::size_t> perm = original;
        while (std::next_permutation(perm.begin(), perm.end()))
            candidates.push_back(perm);
        // next_permutation cycles back to sorted order, which is the original
    } else {
        std::mt19937_64 rng(seed);
        std::set<std::vector<std::size_t>> seen;
        std::vector<std::size_t> perm = original;
        long attempts = 200L * std::max(max_permutations, 1);
        while (static_cast<int>(candidates.size()) < max_permutations && attempts-- > 0) {
            std::shuffle(perm.begin(), perm.end(), rng);
            if (perm != original && seen.insert(perm).second) candidates.push_back(perm);
        }
    }

    ProbeResult best;
    best.token_order = original;
    best.sequence = seq;
    best.log_prob = lm.log_prob(seq);
    for (const auto& perm : candidates) {
        MorphemeSequence permuted = detail::reorder_groups(seq, groups, perm);
        double lp = lm.log_prob(permuted);
        if (lp > best.log_prob) {
            best.token_order = perm;
            best.sequence = std::move(permuted);
            best.log_prob = lp;
            best.original_best = false;
        }
    }
    return best;
}

}  // namespace mlid
