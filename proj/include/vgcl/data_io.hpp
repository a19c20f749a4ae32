#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vgcl/common.hpp"

namespace vgcl {

/// Stable string-id <-> dense-index mapping. Indices are assigned in first
/// appearance order and never change afterwards.
struct IdTable {
  std::vector<std::string> names;
  std::unordered_map<std::string, Index> index;

  Index intern(const std::string& id) {
    auto it = index.find(id);
    if (it != index.end()) return it->second;
    const Index idx = static_cast<Index>(names.size());
    names.push_back(id);
    index.emplace(id, idx);
    return idx;
  }

  /// Index of a known id, or -1.
  Index lookup(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? Index{-1} : it->second;
  }

  Index size() const { return static_cast<Index>(names.size()); }
};

struct InteractionRecord {
  Index user = 0;
  Index item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::int64_t line = 0;  // source line of the surviving occurrence
};

/// Deduplicated interaction log. One record per (user, item); on duplicate
/// input the record with the larger timestamp wins, equal timestamps keep
/// the later line.
struct InteractionLog {
  IdTable users;
  IdTable items;
  std::vector<InteractionRecord> records;

  Index n_users() const { return users.size(); }
  Index n_items() const { return items.size(); }
};

struct CatalogEntry {
  std::string title;
  int year = 0;
  std::vector<std::string> genres;
};

struct Catalog {
  std::unordered_map<std::string, CatalogEntry> by_id;

  const CatalogEntry* find(const std::string& item_id) const {
    auto it = by_id.find(item_id);
    return it == by_id.end() ? nullptr : &it->second;
  }
};

/// Per-user chronological leave-one-out split. `train` shares the full id
/// tables of the source log, so items seen only in validation/test keep
/// their indices (they become isolated graph nodes).
struct SplitDataset {
  InteractionLog train;
  std::unordered_map<Index, Index> validation;  // user -> item
  std::unordered_map<Index, Index> test;        // user -> item
  std::vector<Index> eval_users;                // ascending
};

struct AugmentedEdge {
  Index user = 0;
  Index item = 0;
  float rrf_score = 0.0f;  // float32: 9 significant decimal digits round-trip exactly
  int votes = 0;

  friend bool operator==(const AugmentedEdge&, const AugmentedEdge&) = default;
};

struct AugmentedEdgeSet {
  std::vector<AugmentedEdge> edges;
};

// ---- interactions ---------------------------------------------------------

/// Reads a 4-column TSV (user \t item \t rating \t unix-timestamp).
/// Lines starting with '#' and blank lines are skipped. Throws Error with
/// the offending line number on malformed input, out-of-range ratings or
/// negative timestamps; throws if no records remain.
InteractionLog load_interactions(const std::string& path);

/// Same parser, but ids must resolve against pre-built tables (used to
/// reload a train split while keeping the original node indexing).
InteractionLog load_interactions_with_tables(const std::string& path,
                                             IdTable users, IdTable items);

void write_interactions(const InteractionLog& log, const std::string& path);

Catalog load_catalog(const std::string& path);

SplitDataset leave_one_out_split(const InteractionLog& log);

// ---- split artifacts -------------------------------------------------------

void write_id_table(const IdTable& table, const std::string& path);
IdTable read_id_table(const std::string& path);

void write_pair_map(const std::unordered_map<Index, Index>& pairs,
                    const IdTable& users, const IdTable& items,
                    const std::string& path);
std::unordered_map<Index, Index> read_pair_map(const std::string& path,
                                               const IdTable& users,
                                               const IdTable& items);

// ---- embedding persistence -------------------------------------------------

// Binary format: magic "VGCL", u32 version=1, u64 node count, u32 dim,
// then one row of `dim` little-endian float32 per node. In memory the
// matrix is dim x nodes column-major, so the payload is a straight copy.

void save_embeddings(const DenseMatrix<float>& embeddings,
                     const std::string& path);
DenseMatrix<float> load_embeddings(const std::string& path);

// ---- augmented edge transport ----------------------------------------------

// TSV with header: user_id \t item_id \t rrf_score \t votes. Scores are
// written with 9 significant digits ("%.9g"), which round-trips float32
// bit-exactly.

void write_augmented_edges(const AugmentedEdgeSet& edges, const IdTable& users,
                           const IdTable& items, const std::string& path);
AugmentedEdgeSet read_augmented_edges(const std::string& path,
                                      const IdTable& users,
                                      const IdTable& items);

}  // namespace vgcl
