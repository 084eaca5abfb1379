#include "irtkit/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"

namespace irtkit {

Task parse_task(const std::string& text) {
    const auto s = normalize_label(text);
    if (s == "nli") return Task::NLI;
    if (s == "sa") return Task::SA;
    throw ValidationError("unknown task '" + text + "' (expected nli or sa)");
}

std::string to_string(Task task) { return task == Task::NLI ? "nli" : "sa"; }

const std::vector<std::string>& label_alphabet(Task task) {
    static const std::vector<std::string> nli{"entailment", "neutral", "contradiction"};
    static const std::vector<std::string> sa{"very-negative", "negative", "neutral", "positive", "very-positive"};
    return task == Task::NLI ? nli : sa;
}

const std::vector<std::string>& binary_sentiment_alphabet() {
    static const std::vector<std::string> binary{"negative", "positive"};
    return binary;
}

std::string normalize_label(const std::string& raw, const LabelAliases& aliases) {
    std::string s = csv::trim(raw);
    for (char& ch : s) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (ch == ' ' || ch == '_') ch = '-';
    }
    if (!aliases.empty()) {
        const auto it = aliases.find(s);
        if (it != aliases.end()) return it->second;
    }
    return s;
}

std::string binarize_sentiment(const std::string& label) {
    if (label == "very-negative" || label == "negative") return "negative";
    if (label == "neutral" || label == "positive" || label == "very-positive") return "positive";
    throw ValidationError("not a sentiment label: '" + label + "'");
}

namespace {

bool in_alphabet(const std::string& label, Task task) {
    const auto& alphabet = label_alphabet(task);
    return std::find(alphabet.begin(), alphabet.end(), label) != alphabet.end();
}

// Aliases are stored with normalized keys and canonical values.
LabelAliases normalized_aliases(const LabelAliases& aliases) {
    LabelAliases out;
    for (const auto& [raw, canonical] : aliases) out[normalize_label(raw)] = normalize_label(canonical);
    return out;
}

}  // namespace

AnnotationSet::AnnotationSet(Task task, std::vector<Annotation> records, const LabelAliases& aliases)
    : task_(task), records_(std::move(records)) {
    const auto norm = normalized_aliases(aliases);
    std::set<std::pair<std::string, std::string>> pairs;
    for (auto& r : records_) {
        r.label = normalize_label(r.label, norm);
        if (!in_alphabet(r.label, task_)) {
            throw ValidationError("label '" + r.label + "' from worker '" + r.worker_id + "' on item '" + r.item_id +
                                  "' is not in the " + to_string(task_) + " alphabet");
        }
        if (!pairs.emplace(r.worker_id, r.item_id).second) {
            throw ValidationError("worker '" + r.worker_id + "' annotated item '" + r.item_id + "' twice");
        }
    }
}

AnnotationSet AnnotationSet::binarized() const {
    if (task_ != Task::SA) throw ValidationError("only sentiment annotations can be binarized");
    AnnotationSet out;
    out.task_ = task_;
    out.records_ = records_;
    for (auto& r : out.records_) r.label = binarize_sentiment(r.label);
    return out;
}

AnnotationSet AnnotationSet::parse_csv(const std::string& text, const std::string& source, Task task,
                                       const LabelAliases& aliases) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"worker_id", "item_id", "label"}, source);
    std::vector<Annotation> records;
    records.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        Annotation a{csv::trim(row.fields[0]), csv::trim(row.fields[1]), row.fields[2]};
        if (a.worker_id.empty() || a.item_id.empty()) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": empty identifier");
        }
        records.push_back(std::move(a));
    }
    try {
        return AnnotationSet(task, std::move(records), aliases);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

AnnotationSet AnnotationSet::read_csv(const std::filesystem::path& path, Task task, const LabelAliases& aliases) {
    return parse_csv(read_text_file(path), path.string(), task, aliases);
}

GoldLabels GoldLabels::parse_csv(const std::string& text, const std::string& source, Task task,
                                 const LabelAliases& aliases) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"item_id", "gold_label"}, source);
    const auto norm = normalized_aliases(aliases);
    GoldLabels gold;
    gold.task = task;
    for (const auto& row : table.rows) {
        const auto item = csv::trim(row.fields[0]);
        const auto label = normalize_label(row.fields[1], norm);
        const auto at = source + ":" + std::to_string(row.line) + ": ";
        if (!in_alphabet(label, task)) throw ValidationError(at + "gold label '" + label + "' not in alphabet");
        if (!gold.labels.emplace(item, label).second) throw ValidationError(at + "duplicate item_id '" + item + "'");
    }
    gold.binary = task == Task::SA && !gold.labels.empty() &&
                  std::all_of(gold.labels.begin(), gold.labels.end(),
                              [](const auto& kv) { return kv.second == "negative" || kv.second == "positive"; });
    return gold;
}

GoldLabels GoldLabels::read_csv(const std::filesystem::path& path, Task task, const LabelAliases& aliases) {
    return parse_csv(read_text_file(path), path.string(), task, aliases);
}

LabelAliases read_aliases_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    csv::expect_header(table, {"raw", "canonical"}, path.string());
    LabelAliases out;
    for (const auto& row : table.rows) out[row.fields[0]] = row.fields[1];
    return out;
}

ResponseMatrix grade(const AnnotationSet& annotations, const GoldLabels& gold) {
    if (annotations.task() != gold.task) throw ValidationError("annotation and gold tasks differ");
    std::vector<std::string> workers;
    std::vector<std::string> items;
    std::unordered_set<std::string> wseen;
    std::unordered_set<std::string> iseen;
    std::vector<std::string> missing_gold;
    for (const auto& r : annotations.records()) {
        if (wseen.insert(r.worker_id).second) workers.push_back(r.worker_id);
        if (iseen.insert(r.item_id).second) {
            items.push_back(r.item_id);
            if (!gold.labels.count(r.item_id)) missing_gold.push_back(r.item_id);
        }
    }
    if (!missing_gold.empty()) {
        std::string msg = "items without a gold label:";
        for (const auto& id : missing_gold) msg += " " + id;
        throw ValidationError(msg);
    }
    ResponseMatrix m(std::move(workers), std::move(items));
    for (const auto& r : annotations.records()) {
        const auto& truth = gold.labels.at(r.item_id);
        const auto label = gold.binary ? binarize_sentiment(r.label) : r.label;
        m.set(*m.respondent_index(r.worker_id), *m.item_index(r.item_id), label == truth ? 1 : 0);
    }
    return m;
}

namespace {

AgreementReport kappa_over(const std::vector<const Annotation*>& records, const std::vector<std::string>& categories) {
    std::unordered_map<std::string, std::size_t> category_index;
    for (std::size_t c = 0; c < categories.size(); ++c) category_index.emplace(categories[c], c);

    std::vector<std::string> item_order;
    std::unordered_map<std::string, std::vector<long long>> counts;
    for (const auto* r : records) {
        const auto c = category_index.find(r->label);
        if (c == category_index.end()) throw ValidationError("label '" + r->label + "' is not one of the categories");
        auto [it, fresh] = counts.try_emplace(r->item_id, std::vector<long long>(categories.size(), 0));
        if (fresh) item_order.push_back(r->item_id);
        ++it->second[c->second];
    }

    AgreementReport report;
    std::vector<long long> marginal(categories.size(), 0);
    std::vector<double> agreement;
    for (const auto& item : item_order) {
        const auto& n_ic = counts.at(item);
        long long n = 0;
        long long squares = 0;
        for (long long v : n_ic) {
            n += v;
            squares += v * v;
        }
        if (n < 2) {
            report.excluded_items.push_back(item);
            continue;
        }
        for (std::size_t c = 0; c < n_ic.size(); ++c) marginal[c] += n_ic[c];
        agreement.push_back(static_cast<double>(squares - n) / static_cast<double>(n * (n - 1)));
        report.min_raters = report.n_items == 0 ? n : std::min<std::size_t>(report.min_raters, n);
        report.max_raters = std::max<std::size_t>(report.max_raters, n);
        ++report.n_items;
    }
    if (report.n_items == 0) throw ValidationError("kappa needs at least one item with two or more annotations");

    // Sorted summation keeps the statistic independent of item order.
    std::sort(agreement.begin(), agreement.end());
    double observed = 0.0;
    for (double v : agreement) observed += v;
    observed /= static_cast<double>(agreement.size());

    long long total = 0;
    long long marginal_squares = 0;
    for (long long v : marginal) {
        total += v;
        marginal_squares += v * v;
    }
    const double expected = static_cast<double>(marginal_squares) / (static_cast<double>(total) * static_cast<double>(total));
    if (expected >= 1.0) throw NumericalError("kappa is undefined: every annotation falls in one category");
    report.kappa = (observed - expected) / (1.0 - expected);
    return report;
}

}  // namespace

AgreementReport fleiss_kappa(const AnnotationSet& annotations, const std::vector<std::string>& categories) {
    std::vector<const Annotation*> records;
    records.reserve(annotations.records().size());
    for (const auto& r : annotations.records()) records.push_back(&r);
    return kappa_over(records, categories);
}

std::map<std::string, AgreementReport> fleiss_kappa_by_stratum(
    const AnnotationSet& annotations, const std::vector<std::string>& categories,
    const std::unordered_map<std::string, std::string>& stratum_of) {
    std::map<std::string, std::vector<const Annotation*>> grouped;
    for (const auto& r : annotations.records()) {
        const auto it = stratum_of.find(r.item_id);
        if (it != stratum_of.end()) grouped[it->second].push_back(&r);
    }
    std::map<std::string, AgreementReport> out;
    for (const auto& [stratum, records] : grouped) out.emplace(stratum, kappa_over(records, categories));
    return out;
}

}  // namespace irtkit
