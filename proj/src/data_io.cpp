#include "vgcl/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace vgcl {
namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; big-endian hosts unsupported");

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void fail_at(const std::string& path, std::int64_t line,
                          const std::string& what) {
  throw Error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& s, const std::string& path,
                  std::int64_t line, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    fail_at(path, line, std::string("malformed ") + what + " '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& path,
                       std::int64_t line, const char* what) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    fail_at(path, line, std::string("malformed ") + what + " '" + s + "'");
  return v;
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

std::string chomp(std::string line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.pop_back();
  return line;
}

InteractionLog load_interactions_impl(const std::string& path,
                                      std::optional<IdTable> fixed_users,
                                      std::optional<IdTable> fixed_items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open interactions file: " + path);

  InteractionLog log;
  const bool fixed = fixed_users.has_value();
  if (fixed) {
    log.users = std::move(*fixed_users);
    log.items = std::move(*fixed_items);
  }

  // (user,item) -> slot in log.records, for last-timestamp-wins dedup
  std::map<std::pair<Index, Index>, std::size_t> slot_of;

  std::string raw;
  std::int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = chomp(raw);
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4)
      fail_at(path, line_no, "expected 4 tab-separated fields, got " +
                                 std::to_string(fields.size()));

    Index u, i;
    if (fixed) {
      u = log.users.lookup(fields[0]);
      i = log.items.lookup(fields[1]);
      if (u < 0) fail_at(path, line_no, "unknown user id '" + fields[0] + "'");
      if (i < 0) fail_at(path, line_no, "unknown item id '" + fields[1] + "'");
    } else {
      u = log.users.intern(fields[0]);
      i = log.items.intern(fields[1]);
    }

    const double rating = parse_real(fields[2], path, line_no, "rating");
    if (rating < 1.0 || rating > 5.0)
      fail_at(path, line_no, "rating out of range [1.0, 5.0]: " + fields[2]);
    const std::int64_t ts = parse_int(fields[3], path, line_no, "timestamp");
    if (ts < 0) fail_at(path, line_no, "negative timestamp: " + fields[3]);

    InteractionRecord rec{u, i, rating, ts, line_no};
    auto [it, inserted] = slot_of.try_emplace({u, i}, log.records.size());
    if (inserted) {
      log.records.push_back(rec);
    } else if (rec.timestamp >= log.records[it->second].timestamp) {
      log.records[it->second] = rec;  // last timestamp wins; ties keep later line
    }
  }
  if (log.records.empty())
    throw Error("empty interactions file: " + path);
  return log;
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

}  // namespace

InteractionLog load_interactions(const std::string& path) {
  return load_interactions_impl(path, std::nullopt, std::nullopt);
}

InteractionLog load_interactions_with_tables(const std::string& path,
                                             IdTable users, IdTable items) {
  return load_interactions_impl(path, std::move(users), std::move(items));
}

void write_interactions(const InteractionLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write interactions file: " + path);
  out << "# user_id\titem_id\trating\ttimestamp\n";
  char num[64];
  for (const auto& r : log.records) {
    std::snprintf(num, sizeof(num), "%.9g", r.rating);
    out << log.users.names[r.user] << '\t' << log.items.names[r.item] << '\t'
        << num << '\t' << r.timestamp << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metadata file: " + path);
  Catalog cat;
  std::string raw;
  std::int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = chomp(raw);
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4)
      fail_at(path, line_no, "expected 4 tab-separated fields (item_id, title, year, genres)");
    CatalogEntry entry;
    entry.title = fields[1];
    entry.year = static_cast<int>(parse_int(fields[2], path, line_no, "year"));
    std::stringstream genres(fields[3]);
    std::string g;
    while (std::getline(genres, g, '|'))
      if (!g.empty()) entry.genres.push_back(g);
    cat.by_id[fields[0]] = std::move(entry);
  }
  return cat;
}

SplitDataset leave_one_out_split(const InteractionLog& log) {
  if (log.records.empty()) throw Error("cannot split an empty log");

  std::vector<std::vector<std::size_t>> per_user(log.n_users());
  for (std::size_t k = 0; k < log.records.size(); ++k)
    per_user[log.records[k].user].push_back(k);

  // Chronological order; equal timestamps fall back to file order.
  const auto later = [&](std::size_t a, std::size_t b) {
    const auto& ra = log.records[a];
    const auto& rb = log.records[b];
    return ra.timestamp != rb.timestamp ? ra.timestamp < rb.timestamp
                                        : ra.line < rb.line;
  };

  SplitDataset split;
  split.train.users = log.users;
  split.train.items = log.items;
  std::vector<bool> held_out(log.records.size(), false);

  for (Index u = 0; u < log.n_users(); ++u) {
    auto& recs = per_user[u];
    if (recs.size() < 3) continue;  // too short: everything stays in train
    std::sort(recs.begin(), recs.end(), later);
    const std::size_t val = recs[recs.size() - 2];
    const std::size_t test = recs[recs.size() - 1];
    held_out[val] = held_out[test] = true;
    split.validation[u] = log.records[val].item;
    split.test[u] = log.records[test].item;
    split.eval_users.push_back(u);
  }
  for (std::size_t k = 0; k < log.records.size(); ++k)
    if (!held_out[k]) split.train.records.push_back(log.records[k]);
  return split;
}

void write_id_table(const IdTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write id table: " + path);
  out << "# id\tindex\n";
  for (Index i = 0; i < table.size(); ++i)
    out << table.names[i] << '\t' << i << '\n';
  if (!out) throw Error("write failed: " + path);
}

IdTable read_id_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open id table: " + path);
  IdTable table;
  std::string raw;
  std::int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = chomp(raw);
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) fail_at(path, line_no, "expected id\\tindex");
    const Index idx = parse_int(fields[1], path, line_no, "index");
    if (idx != table.size())
      fail_at(path, line_no, "indices must be dense and ascending");
    table.intern(fields[0]);
  }
  return table;
}

void write_pair_map(const std::unordered_map<Index, Index>& pairs,
                    const IdTable& users, const IdTable& items,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write map file: " + path);
  out << "# user_id\titem_id\n";
  std::vector<Index> order;
  order.reserve(pairs.size());
  for (const auto& [u, _] : pairs) order.push_back(u);
  std::sort(order.begin(), order.end());
  for (Index u : order)
    out << users.names[u] << '\t' << items.names[pairs.at(u)] << '\n';
  if (!out) throw Error("write failed: " + path);
}

std::unordered_map<Index, Index> read_pair_map(const std::string& path,
                                               const IdTable& users,
                                               const IdTable& items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open map file: " + path);
  std::unordered_map<Index, Index> pairs;
  std::string raw;
  std::int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = chomp(raw);
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) fail_at(path, line_no, "expected user_id\\titem_id");
    const Index u = users.lookup(fields[0]);
    const Index i = items.lookup(fields[1]);
    if (u < 0) fail_at(path, line_no, "unknown user id '" + fields[0] + "'");
    if (i < 0) fail_at(path, line_no, "unknown item id '" + fields[1] + "'");
    pairs[u] = i;
  }
  return pairs;
}

void save_embeddings(const DenseMatrix<float>& embeddings,
                     const std::string& path) {
  if (!embeddings.allFinite())
    throw Error("refusing to save non-finite embeddings");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embeddings file: " + path);
  out.write("VGCL", 4);
  put_u32(out, 1u);
  put_u64(out, static_cast<std::uint64_t>(embeddings.cols()));  // nodes
  put_u32(out, static_cast<std::uint32_t>(embeddings.rows()));  // dim
  out.write(reinterpret_cast<const char*>(embeddings.data()),
            static_cast<std::streamsize>(sizeof(float) * embeddings.size()));
  if (!out) throw Error("write failed: " + path);
}

DenseMatrix<float> load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embeddings file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "VGCL", 4) != 0)
    throw Error(path + ": bad magic");
  std::uint32_t version = 0, dim = 0;
  std::uint64_t nodes = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4))
    throw Error(path + ": truncated header");
  if (version != 1)
    throw Error(path + ": unsupported version " + std::to_string(version));
  if (!in.read(reinterpret_cast<char*>(&nodes), 8) ||
      !in.read(reinterpret_cast<char*>(&dim), 4))
    throw Error(path + ": truncated header");

  DenseMatrix<float> m(static_cast<Index>(dim), static_cast<Index>(nodes));
  const std::streamsize payload =
      static_cast<std::streamsize>(sizeof(float) * m.size());
  if (!in.read(reinterpret_cast<char*>(m.data()), payload))
    throw Error(path + ": truncated payload (header says " +
                std::to_string(nodes) + " x " + std::to_string(dim) + ")");
  char extra;
  if (in.read(&extra, 1))
    throw Error(path + ": trailing bytes after payload");
  return m;
}

void write_augmented_edges(const AugmentedEdgeSet& edges, const IdTable& users,
                           const IdTable& items, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write augmented edges file: " + path);
  out << "user_id\titem_id\trrf_score\tvotes\n";
  char num[64];
  for (const auto& e : edges.edges) {
    if (e.user < 0 || e.user >= users.size() || e.item < 0 ||
        e.item >= items.size())
      throw Error("augmented edge references an out-of-table index");
    std::snprintf(num, sizeof(num), "%.9g", static_cast<double>(e.rrf_score));
    out << users.names[e.user] << '\t' << items.names[e.item] << '\t' << num
        << '\t' << e.votes << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

AugmentedEdgeSet read_augmented_edges(const std::string& path,
                                      const IdTable& users,
                                      const IdTable& items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open augmented edges file: " + path);
  AugmentedEdgeSet set;
  std::string raw;
  std::int64_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = chomp(raw);
    if (skippable(line)) continue;
    if (!header_seen) {
      if (line != "user_id\titem_id\trrf_score\tvotes")
        fail_at(path, line_no, "missing augmented-edges header");
      header_seen = true;
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 4) fail_at(path, line_no, "expected 4 fields");
    AugmentedEdge e;
    e.user = users.lookup(fields[0]);
    e.item = items.lookup(fields[1]);
    if (e.user < 0) fail_at(path, line_no, "unknown user id '" + fields[0] + "'");
    if (e.item < 0) fail_at(path, line_no, "unknown item id '" + fields[1] + "'");
    char* end = nullptr;
    e.rrf_score = std::strtof(fields[2].c_str(), &end);
    if (fields[2].empty() || end != fields[2].c_str() + fields[2].size())
      fail_at(path, line_no, "malformed rrf_score '" + fields[2] + "'");
    e.votes = static_cast<int>(parse_int(fields[3], path, line_no, "votes"));
    set.edges.push_back(e);
  }
  if (!header_seen) fail_at(path, 1, "missing augmented-edges header");
  return set;
}

}  // namespace vgcl
