#pragma once

// Crowd annotations: label normalization, grading against gold labels, and
// Fleiss' kappa.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "irtkit/response_matrix.hpp"

namespace irtkit {

enum class Task { NLI, SA };

Task parse_task(const std::string& text);
std::string to_string(Task task);

/// Canonical labels: entailment/neutral/contradiction, or the five sentiment
/// grades from very-negative to very-positive.
const std::vector<std::string>& label_alphabet(Task task);
const std::vector<std::string>& binary_sentiment_alphabet();

/// Raw label -> canonical label. Keys are matched after normalization.
using LabelAliases = std::unordered_map<std::string, std::string>;

/// Trims, lower-cases, and maps spaces/underscores to hyphens, then applies
/// `aliases`.
std::string normalize_label(const std::string& raw, const LabelAliases& aliases = {});

/// very-negative, negative -> negative; neutral, positive, very-positive -> positive.
/// Binary labels map to themselves.
std::string binarize_sentiment(const std::string& label);

struct Annotation {
    std::string worker_id;
    std::string item_id;
    std::string label;
};

class AnnotationSet {
public:
    /// Normalizes every label and checks it against the task alphabet; (worker, item) pairs must be unique.
    AnnotationSet(Task task, std::vector<Annotation> records, const LabelAliases& aliases = {});

    Task task() const noexcept { return task_; }
    const std::vector<Annotation>& records() const noexcept { return records_; }

    /// SA only: the same annotations with labels collapsed to negative/positive.
    AnnotationSet binarized() const;

    /// `worker_id,item_id,label`
    static AnnotationSet read_csv(const std::filesystem::path& path, Task task, const LabelAliases& aliases = {});
    static AnnotationSet parse_csv(const std::string& text, const std::string& source, Task task,
                                   const LabelAliases& aliases = {});

private:
    AnnotationSet() = default;
    Task task_ = Task::NLI;
    std::vector<Annotation> records_;
};

/// Gold label per item. For SA the gold set is binary when every label is
/// negative or positive; annotations are then binarized before comparison.
struct GoldLabels {
    Task task = Task::NLI;
    std::map<std::string, std::string> labels;
    bool binary = false;

    /// `item_id,gold_label`
    static GoldLabels parse_csv(const std::string& text, const std::string& source, Task task,
                                const LabelAliases& aliases = {});
    static GoldLabels read_csv(const std::filesystem::path& path, Task task, const LabelAliases& aliases = {});
};

/// `raw,canonical` CSV.
LabelAliases read_aliases_csv(const std::filesystem::path& path);

/// Cell (worker, item) is 1 iff the worker's (binned) label equals gold.
/// Unannotated pairs stay missing. Throws ValidationError for items lacking gold.
ResponseMatrix grade(const AnnotationSet& annotations, const GoldLabels& gold);

struct AgreementReport {
    double kappa = 0.0;
    std::size_t n_items = 0;
    std::size_t min_raters = 0;
    std::size_t max_raters = 0;
    /// Items with a single annotation, left out of the computation.
    std::vector<std::string> excluded_items;
};

/// Fleiss' kappa with per-item rater counts n_i:
///   P_i = (sum_c n_ic^2 - n_i) / (n_i (n_i - 1)),  p_c = sum_i n_ic / sum_i n_i,
///   kappa = (mean P_i - sum_c p_c^2) / (1 - sum_c p_c^2).
/// Reduces to the classic statistic when every item has the same n.
/// Throws ValidationError for labels outside `categories` or when no item has
/// two annotations, NumericalError when chance agreement is 1.
AgreementReport fleiss_kappa(const AnnotationSet& annotations, const std::vector<std::string>& categories);

/// Kappa computed separately for each stratum; items missing from
/// `stratum_of` are ignored.
std::map<std::string, AgreementReport> fleiss_kappa_by_stratum(
    const AnnotationSet& annotations, const std::vector<std::string>& categories,
    const std::unordered_map<std::string, std::string>& stratum_of);

}  // namespace irtkit
