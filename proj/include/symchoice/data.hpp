#ifndef SYMCHOICE_DATA_HPP
#define SYMCHOICE_DATA_HPP

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace symchoice::data {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Column layout of a choice dataset. Individual attributes and
// alternative-specific attributes share one flat numeric namespace.
struct DatasetSchema {
  std::string task;
  std::vector<std::string> alternatives;  // ordered choice set
  std::string label_column;
  std::string id_column;  // empty: every row is its own individual
  std::vector<std::string> features;
  std::vector<std::string> demographics;  // subset of features used for grouping
  // raw label cell -> alternative name (e.g. "1" -> "Train")
  std::map<std::string, std::string> label_codes;
  // column -> raw cell -> numeric code, for categorical feature columns
  std::map<std::string, std::map<std::string, double>> value_codes;
  // column -> rendered code -> human-readable value, for prompt text
  std::map<std::string, std::map<std::string, std::string>> display;

  int alternative_index(const std::string& name) const;
  static DatasetSchema from_json_file(const std::string& path);
};

struct Observation {
  std::string individual_id;
  std::map<std::string, double> features;
  int label;  // index into schema.alternatives
};

struct Dataset {
  DatasetSchema schema;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
  // distinct individual ids in first-appearance order
  std::vector<std::string> individuals() const;
};

struct LoadResult {
  Dataset dataset;
  std::size_t rows_total = 0;
  std::size_t rows_dropped = 0;
};

// Delimited text with a header row. Rows with missing or non-numeric feature
// cells are dropped and counted; a label outside the alternative set is a
// hard error naming the row.
LoadResult load_dataset(const std::string& path, const DatasetSchema& schema,
                        char delimiter = ',');

// ---------------------------------------------------------------------------
// Demographic stratification
// ---------------------------------------------------------------------------

struct BucketSpec {
  enum class Kind { Categorical, Edges, Tertiles };
  Kind kind = Kind::Tertiles;
  std::vector<double> edges;  // for Kind::Edges
};
using BucketMap = std::map<std::string, BucketSpec>;

// Bucket boundaries pinned against one dataset so train and test stratify
// identically (tertile edges, observed categorical values).
struct ResolvedBuckets {
  struct Dim {
    BucketSpec::Kind kind;
    std::vector<double> edges;    // Edges / resolved Tertiles
    std::vector<double> values;   // observed Categorical values, sorted
  };
  std::vector<std::string> dims;  // stratification order
  std::map<std::string, Dim> by_dim;
};

ResolvedBuckets resolve_buckets(const Dataset& dataset, const std::vector<std::string>& dims,
                                const BucketMap& spec);

using GroupKey = std::string;

struct GroupInfo {
  GroupKey key;          // e.g. "age=24to39|income=lt50"
  std::string description;  // prompt-facing, e.g. "age: 24 to 39; income: below 50"
};

// Disjoint and exhaustive partition; every cell of the bucket product is
// present, including empty ones. Groups are ordered by key.
std::vector<std::pair<GroupInfo, Dataset>> stratify_groups(const Dataset& dataset,
                                                           const ResolvedBuckets& buckets);

GroupKey group_key_for(const Observation& obs, const ResolvedBuckets& buckets);

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

// Individual-level split, stratified by label so class priors stay
// comparable. All records of one individual land on one side. Deterministic
// under seed.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio, std::uint64_t seed);

}  // namespace symchoice::data

#endif  // SYMCHOICE_DATA_HPP
