#pragma once

// Brute-force reference implementation of the interpolated Kneser-Ney
// smoothing formula. Every count is recomputed by scanning the stored
// training sequences, so this path shares no count tables or lookup code
// with the library model it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mlid::testing {

class KneserNeyOracle {
  public:
    KneserNeyOracle(const std::vector<std::vector<std::string>>& utterances, int order,
                    int min_count, double discount)
        : order_(order), discount_(discount) {
        std::map<std::string, long> freq;
        for (const auto& u : utterances)
            for (const auto& m : u) ++freq[m];
        for (const auto& [m, c] : freq)
            if (c >= min_count) kept_.insert(m);
        for (const auto& u : utterances) {
            std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), "<s>");
            for (const auto& m : u) padded.push_back(map_symbol(m));
            padded.push_back("</s>");
            sequences_.push_back(std::move(padded));
        }
    }

    double vocab_size() const { return static_cast<double>(kept_.size() + 2); }  // + unk, eos

    double sequence_log_prob(const std::vector<std::string>& utterance) const {
        std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), "<s>");
        for (const auto& m : utterance) padded.push_back(map_symbol(m));
        padded.push_back("</s>");
        double total = 0.0;
        for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < padded.size(); ++p) {
            std::vector<std::string> hist(padded.begin() + p - (order_ - 1), padded.begin() + p);
            total += std::log(prob(order_, hist, padded[p]));
        }
        return total;
    }

    double conditional(const std::string& w, std::vector<std::string> history) const {
        std::vector<std::string> hist(static_cast<std::size_t>(order_ - 1), "<s>");
        for (auto& h : history) {
            if (hist.empty()) break;
            hist.erase(hist.begin());
            hist.push_back(map_symbol(h));
        }
        return prob(order_, hist, map_symbol(w));
    }

  private:
    std::string map_symbol(const std::string& m) const {
        return kept_.count(m) ? m : "<unk>";
    }

    // Count of windows of |gram| symbols ending at a prediction position.
    long count(const std::vector<std::string>& gram) const {
        long total = 0;
        const std::size_t k = gram.size();
        for (const auto& seq : sequences_)
            for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < seq.size(); ++p) {
                if (p + 1 < k) continue;
                if (std::equal(gram.begin(), gram.end(), seq.begin() + (p + 1 - k)))
                    ++total;
            }
        return total;
    }

    // Distinct symbols observed immediately before `gram`.
    long distinct_left(const std::vector<std::string>& gram) const {
        std::set<std::string> seen;
        const std::size_t k = gram.size();
        for (const auto& seq : sequences_)
            for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < seq.size(); ++p) {
                if (p + 1 < k + 1) continue;
                if (std::equal(gram.begin(), gram.end(), seq.begin() + (p + 1 - k)))
                    seen.insert(seq[p - k]);
            }
        return static_cast<long>(seen.size());
    }

    // All distinct windows of length k ending at prediction positions.
    std::set<std::vector<std::string>> gram_types(std::size_t k) const {
        std::set<std::vector<std::string>> types;
        for (const auto& seq : sequences_)
            for (std::size_t p = static_cast<std::size_t>(order_ - 1); p < seq.size(); ++p) {
                if (p + 1 < k) continue;
                types.insert(std::vector<std::string>(seq.begin() + (p + 1 - k),
                                                      seq.begin() + p + 1));
            }
        return types;
    }

    double prob(int k, const std::vector<std::string>& hist, const std::string& w) const {
        const double d = discount_;
        if (k == 1) {
            if (order_ == 1) {
                long total = 0, types = 0;
                for (const auto& g : gram_types(1)) {
                    total += count(g);
                    ++types;
                }
                if (total == 0) return 1.0 / vocab_size();
                long num = count({w});
                return std::max(static_cast<double>(num) - d, 0.0) / total +
                       (d * types / total) * (1.0 / vocab_size());
            }
            auto bigrams = gram_types(2);
            long total = static_cast<long>(bigrams.size());
            std::set<std::string> finals;
            for (const auto& g : bigrams) finals.insert(g.back());
            long types = static_cast<long>(finals.size());
            if (total == 0) return 1.0 / vocab_size();
            long num = distinct_left({w});
            return std::max(static_cast<double>(num) - d, 0.0) / total +
                   (d * types / total) * (1.0 / vocab_size());
        }
        std::vector<std::string> shorter(hist.begin() + 1, hist.end());
        if (k == order_) {
            long denom = 0, types = 0;
            for (const auto& g : gram_types(static_cast<std::size_t>(k))) {
                if (std::equal(hist.begin(), hist.end(), g.begin())) {
                    denom += count(g);
                    ++types;
                }
            }
            if (denom == 0) return prob(k - 1, shorter, w);
            std::vector<std::string> full = hist;
            full.push_back(w);
            long num = count(full);
            return std::max(static_cast<double>(num) - d, 0.0) / denom +
                   (d * types / denom) * prob(k - 1, shorter, w);
        }
        // middle orders: continuation counts from (k+1)-gram types
        long denom = 0, types = 0;
        std::set<std::string> final_set;
        for (const auto& g : gram_types(static_cast<std::size_t>(k + 1))) {
            if (std::equal(hist.begin(), hist.end(), g.begin() + 1)) {
                ++denom;  // one distinct (v, hist, w) type
                final_set.insert(g.back());
            }
        }
        types = static_cast<long>(final_set.size());
        if (denom == 0) return prob(k - 1, shorter, w);
        std::vector<std::string> full = hist;
        full.push_back(w);
        long num = distinct_left(full);
        return std::max(static_cast<double>(num) - d, 0.0) / denom +
               (d * types / denom) * prob(k - 1, shorter, w);
    }

    int order_;
    double discount_;
    std::set<std::string> kept_;
    std::vector<std::vector<std::string>> sequences_;
};

}  // namespace mlid::testing
