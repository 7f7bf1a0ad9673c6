#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlid/corpus.hpp"
#include "mlid/util.hpp"
#include "mlid/verdict.hpp"

namespace mlid {

struct ConfusionMatrix {
    std::vector<std::string> labels;          // ordered label set
    std::vector<std::vector<long>> counts;    // counts[actual][predicted]
    long total = 0;

    static ConfusionMatrix from_pairs(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
        if (a.size() != b.size())
            throw input_error("confusion matrix: label vectors differ in length");
        ConfusionMatrix cm;
        std::set<std::string> universe(a.begin(), a.end());
        universe.insert(b.begin(), b.end());
        cm.labels.assign(universe.begin(), universe.end());
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < cm.labels.size(); ++i) index[cm.labels[i]] = i;
        cm.counts.assign(cm.labels.size(), std::vector<long>(cm.labels.size(), 0));
        for (std::size_t i = 0; i < a.size(); ++i) ++cm.counts[index[a[i]]][index[b[i]]];
        cm.total = static_cast<long>(a.size());
        return cm;
    }
};

// Generalized (R_k) Matthews correlation over a confusion matrix; reduces to
// the classical binary formula for two classes. Zero when the denominator
// vanishes (constant predictions).
inline double mcc(const ConfusionMatrix& cm) {
    const std::size_t k = cm.labels.size();
    double trace = 0.0, n = static_cast<double>(cm.total);
    std::vector<double> row(k, 0.0), col(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double c = static_cast<double>(cm.counts[i][j]);
            if (i == j) trace += c;
            row[i] += c;
            col[j] += c;
        }
    double row_col = 0.0, row_sq = 0.0, col_sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        row_col += row[i] * col[i];
        row_sq += row[i] * row[i];
        col_sq += col[i] * col[i];
    }
    double numerator = n * trace - row_col;
    double denominator = std::sqrt((n * n - row_sq) * (n * n - col_sq));
    if (denominator < 1e-12) return 0.0;
    return numerator / denominator;
}

inline double mcc(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) throw input_error("mcc: label vectors differ in length");
    if (a.size() < 2) throw input_error("mcc needs at least two compared items");
    return mcc(ConfusionMatrix::from_pairs(a, b));
}

enum class UnknownPolicy : std::uint8_t { PerSystem, Shared };

// MCC with undetermined verdicts kept as explicit classes. Each system's
// unknowns become its own class by default, mirroring the per-principle
// "unknown MLID" treatment.
inline double mcc_with_unknown(const std::vector<std::string>& a,
                               const std::vector<std::string>& b,
                               UnknownPolicy policy = UnknownPolicy::PerSystem,
                               const std::string& unknown_label = "und",
                               const std::string& name_a = "a",
                               const std::string& name_b = "b") {
    if (a.size() != b.size())
        throw input_error("mcc_with_unknown: label vectors differ in length");
    auto relabel = [&](const std::vector<std::string>& labels, const std::string& name) {
        std::vector<std::string> out = labels;
        for (std::string& l : out)
            if (l == unknown_label)
                l = policy == UnknownPolicy::PerSystem ? "unknown:" + name : "unknown";
        return out;
    };
    return mcc(relabel(a, name_a), relabel(b, name_b));
}

// Unweighted mean of per-class F1 over the truth's binary label universe.
// Predictions outside the universe count as misses for the true class.
inline double f1_macro(const std::vector<std::string>& pred,
                       const std::vector<std::string>& truth) {
    if (pred.size() != truth.size()) throw input_error("f1_macro: vectors differ in length");
    if (truth.empty()) throw input_error("f1_macro over empty vectors");
    std::set<std::string> universe(truth.begin(), truth.end());
    if (universe.size() > 2) throw input_error("f1_macro: truth labels must be binary");
    double sum = 0.0;
    std::size_t classes = 0;
    for (const std::string& cls : universe) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == cls && truth[i] == cls) ++tp;
            else if (pred[i] == cls) ++fp;
            else if (truth[i] == cls) ++fn;
        }
        double denom = static_cast<double>(2 * tp + fp + fn);
        sum += denom > 0 ? 2.0 * tp / denom : 0.0;
        ++classes;
    }
    return sum / static_cast<double>(classes);
}

struct AgreementMatrix {
    std::vector<std::string> systems;
    // mcc[i][j] over utterances where both systems are determined; empty
    // cell when the pair shares no covered utterance.
    std::vector<std::vector<std::optional<double>>> values;
    std::vector<std::vector<long>> overlap;

    std::string to_csv() const {
        std::string out = "system";
        for (const auto& s : systems) out += "," + csv_escape(s);
        out += "\n";
        for (std::size_t i = 0; i < systems.size(); ++i) {
            out += csv_escape(systems[i]);
            for (std::size_t j = 0; j < systems.size(); ++j)
                out += "," + (values[i][j] ? fmt_double(*values[i][j]) : std::string());
            out += "\n";
        }
        return out;
    }
};

// Pairwise MCC restricted to utterances both systems determined.
inline AgreementMatrix agreement_matrix(
    const std::map<std::string, std::map<std::string, std::string>>& systems,
    const std::string& unknown_label = "und") {
    if (systems.size() < 2) throw input_error("agreement matrix needs at least two systems");
    AgreementMatrix m;
    for (const auto& [name, verdicts] : systems) m.systems.push_back(name);
    const std::size_t n = m.systems.size();
    m.values.assign(n, std::vector<std::optional<double>>(n));
    m.overlap.assign(n, std::vector<long>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        m.values[i][i] = 1.0;
        const auto& vi = systems.at(m.systems[i]);
        for (const auto& [id, label] : vi)
            if (label != unknown_label) ++m.overlap[i][i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& vj = systems.at(m.systems[j]);
            std::vector<std::string> a, b;
            for (const auto& [id, label] : vi) {
                if (label == unknown_label) continue;
                auto it = vj.find(id);
                if (it == vj.end() || it->second == unknown_label) continue;
                a.push_back(label);
                b.push_back(it->second);
            }
            m.overlap[i][j] = m.overlap[j][i] = static_cast<long>(a.size());
            if (a.size() >= 2) {
                double value = mcc(a, b);
                m.values[i][j] = value;
                m.values[j][i] = value;
            }
        }
    }
    return m;
}

struct DistributionReport {
    std::vector<std::string> languages;  // column order: pair.l1, pair.l2
    struct Row {
        std::string name;
        std::vector<double> percent;
        long support;
    };
    std::vector<Row> rows;

    std::string to_csv() const {
        std::string out = "row";
        for (const auto& l : languages) out += ",pct_" + l;
        out += ",support\n";
        for (const auto& r : rows) {
            out += csv_escape(r.name);
            for (double p : r.percent) out += "," + fmt_fixed(p, 2);
            out += "," + std::to_string(r.support) + "\n";
        }
        return out;
    }

    std::string to_text() const {
        std::ostringstream out;
        out << std::left << std::setw(24) << "";
        for (const auto& l : languages) out << std::right << std::setw(10) << l;
        out << std::setw(10) << "n" << "\n";
        for (const auto& r : rows) {
            out << std::left << std::setw(24) << r.name;
            for (double p : r.percent)
                out << std::right << std::setw(9) << fmt_fixed(p, 1) << "%";
            out << std::setw(10) << r.support << "\n";
        }
        return out.str();
    }
};

// Language shares of: monolingual utterances, code-switched tokens (OTHER
// excluded), and each system's determined verdicts.
inline DistributionReport distribution_report(
    const Corpus& corpus,
    const std::map<std::string, std::map<std::string, MlLabel>>& verdict_sets) {
    DistributionReport report;
    report.languages = {corpus.pair.l1, corpus.pair.l2};

    long mono1 = 0, mono2 = 0, tok1 = 0, tok2 = 0;
    for (const Utterance& u : corpus.utterances) {
        if (u.kind == Kind::MonolingualL1) ++mono1;
        if (u.kind == Kind::MonolingualL2) ++mono2;
        if (u.kind == Kind::CodeSwitched)
            for (const Token& t : u.tokens) {
                if (t.lid == Lid::L1) ++tok1;
                if (t.lid == Lid::L2) ++tok2;
            }
    }
    auto push = [&](const std::string& name, long c1, long c2) {
        long total = c1 + c2;
        if (total == 0) throw compute_error("distribution report over an empty subset: " + name);
        report.rows.push_back({name,
                               {100.0 * c1 / static_cast<double>(total),
                                100.0 * c2 / static_cast<double>(total)},
                               total});
    };
    push("utterance_lid_mono", mono1, mono2);
    push("token_lid_cs", tok1, tok2);
    for (const auto& [name, verdicts] : verdict_sets) {
        long c1 = 0, c2 = 0;
        for (const auto& [id, label] : verdicts) {
            if (label == MlLabel::L1) ++c1;
            if (label == MlLabel::L2) ++c2;
        }
        push(name, c1, c2);
    }
    return report;
}

// Language-balance statistic over token shares: 0 when monolingual, 1 when
// perfectly balanced.
inline double m_index(const std::vector<double>& shares) {
    if (shares.size() < 2) throw input_error("m_index needs at least two language shares");
    double total = 0.0, sum_sq = 0.0;
    for (double s : shares) {
        if (s < 0.0) throw input_error("m_index: negative share");
        total += s;
    }
    if (total <= 0.0) throw compute_error("m_index over zero tokens");
    for (double s : shares) {
        double p = s / total;
        sum_sq += p * p;
    }
    double k = static_cast<double>(shares.size());
    return (1.0 - sum_sq) / ((k - 1.0) * sum_sq);
}

inline double m_index(const Corpus& corpus) {
    double c1 = 0, c2 = 0;
    for (const Utterance& u : corpus.utterances) {
        if (u.kind != Kind::CodeSwitched) continue;
        for (const Token& t : u.tokens) {
            if (t.lid == Lid::L1) ++c1;
            if (t.lid == Lid::L2) ++c2;
        }
    }
    return m_index({c1, c2});
}

}  // namespace mlid
