#include "oobnlab/learning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include "oobnlab/error.hpp"
#include "oobnlab/kernels.hpp"
#include "oobnlab/network_io.hpp"

namespace oobnlab {

using nlohmann::json;

Dataset::Dataset(std::vector<Variable> columns) : columns_(std::move(columns)) {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (columns_[i].name == columns_[j].name)
        throw Error(Errc::DuplicateName, "column '" + columns_[i].name + "' appears twice");
}

void Dataset::add_row(std::span<const std::size_t> states, double weight) {
  if (states.size() != columns_.size()) throw Error(Errc::InvalidArgument, "row width does not match the columns");
  for (std::size_t c = 0; c < states.size(); ++c)
    if (states[c] >= columns_[c].cardinality())
      throw Error(Errc::UnknownState, "state index out of range for column '" + columns_[c].name + "'");
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw Error(Errc::InvalidArgument, "row weight must be finite and >= 0");
  cells_.insert(cells_.end(), states.begin(), states.end());
  weights_.push_back(weight);
}

void Dataset::add_row_labels(std::span<const std::string> labels, double weight) {
  if (labels.size() != columns_.size()) throw Error(Errc::InvalidArgument, "row width does not match the columns");
  std::vector<std::size_t> states(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto s = columns_[c].state_index(labels[c]);
    if (!s)
      throw Error(Errc::UnknownState, "column '" + columns_[c].name + "' has no state '" + labels[c] + "'",
                  {{"column", columns_[c].name}, {"label", labels[c]}});
    states[c] = *s;
  }
  add_row(states, weight);
}

std::size_t Dataset::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (columns_[c].name == name) return c;
  throw Error(Errc::MissingColumn, "dataset has no column '" + std::string(name) + "'", {{"column", name}});
}

double Dataset::total_weight() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

std::vector<double> Dataset::counts(std::span<const std::size_t> cols) const {
  std::vector<std::size_t> cards;
  for (std::size_t c : cols) cards.push_back(columns_.at(c).cardinality());
  return kernels::parallel::count_configurations(cells_, columns_.size(), weights_, cols, cards);
}

Skeleton skeleton_of(const Network& net) { return {net.variables(), net.edges()}; }

std::vector<Cpt> mle_cpts(const Skeleton& structure, const Dataset& data, double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing))
    throw Error(Errc::InvalidArgument, "smoothing must be a finite pseudo-count >= 0", {{"smoothing", smoothing}});
  auto column_for = [&](const Variable& v) {
    const std::size_t c = data.column(v.name);
    if (data.columns()[c].states != v.states)
      throw Error(Errc::SchemaError, "dataset states for '" + v.name + "' differ from the structure",
                  {{"variable", v.name}, {"dataset_states", data.columns()[c].states}, {"states", v.states}});
    return c;
  };
  std::vector<Cpt> out;
  for (const auto& v : structure.variables) {
    Cpt cpt{v.name, {}, {}};
    std::vector<std::size_t> cols;
    for (const auto& e : structure.edges)
      if (e.child == v.name) {
        cpt.parents.push_back(e.parent);
        auto it = std::find_if(structure.variables.begin(), structure.variables.end(),
                               [&](const Variable& u) { return u.name == e.parent; });
        if (it == structure.variables.end())
          throw Error(Errc::DanglingReference, "edge from unknown variable '" + e.parent + "'");
        cols.push_back(column_for(*it));
      }
    cols.push_back(column_for(v));
    const auto counts = data.counts(cols);
    const std::size_t k = v.cardinality();
    const std::size_t rows = counts.size() / k;
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t s = 0; s < k; ++s) total += counts[r * k + s];
      const double denom = total + smoothing * static_cast<double>(k);
      if (!(denom > 0.0))
        throw Error(Errc::EmptyRowWithoutSmoothing,
                    "no data for a parent configuration of '" + v.name + "' and smoothing is 0",
                    {{"variable", v.name}, {"row", r}});
      std::vector<double> row(k);
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        row[s] = (counts[r * k + s] + smoothing) / denom;
        sum += row[s];
      }
      for (double& p : row) p /= sum;
      cpt.table.push_back(std::move(row));
    }
    out.push_back(std::move(cpt));
  }
  return out;
}

Network learn_network(const Skeleton& structure, const Dataset& data, double smoothing) {
  return Network::build(structure.variables, structure.edges, mle_cpts(structure, data, smoothing));
}

double empirical_mutual_information(const Dataset& data, std::string_view x, std::string_view y) {
  const std::size_t cx = data.column(x), cy = data.column(y);
  if (cx == cy) throw Error(Errc::InvalidArgument, "mutual information needs two distinct columns");
  const std::size_t cols[] = {cx, cy};
  const auto counts = data.counts(cols);
  const std::size_t kx = data.columns()[cx].cardinality(), ky = data.columns()[cy].cardinality();
  double total = 0.0;
  for (double c : counts) total += c;
  if (!(total > 0.0)) return 0.0;
  std::vector<double> px(kx, 0.0), py(ky, 0.0);
  for (std::size_t i = 0; i < kx; ++i)
    for (std::size_t j = 0; j < ky; ++j) {
      px[i] += counts[i * ky + j] / total;
      py[j] += counts[i * ky + j] / total;
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < kx; ++i)
    for (std::size_t j = 0; j < ky; ++j) {
      const double p = counts[i * ky + j] / total;
      if (p > 0.0) mi += p * std::log2(p / (px[i] * py[j]));
    }
  return std::max(0.0, mi);
}

Skeleton chow_liu_tree(const Dataset& data, std::string_view root) {
  const std::size_t n = data.width();
  if (n < 2) throw Error(Errc::InvalidArgument, "Chow-Liu needs at least two variables");
  const std::size_t r = data.column(root);
  const auto& cols = data.columns();

  struct Candidate {
    double weight;
    std::string a, b;  // a < b
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      auto [a, b] = std::minmax(cols[i].name, cols[j].name);
      candidates.push_back({empirical_mutual_information(data, cols[i].name, cols[j].name), a, b, i, j});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  // Kruskal with union-find.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& c : candidates) {
    const std::size_t ri = find(c.i), rj = find(c.j);
    if (ri == rj) continue;
    parent[ri] = rj;
    adj[c.i].push_back(c.j);
    adj[c.j].push_back(c.i);
  }

  Skeleton out{cols, {}};
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(r);
  seen[r] = true;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    auto next = adj[u];
    std::sort(next.begin(), next.end(), [&](std::size_t a, std::size_t b) { return cols[a].name < cols[b].name; });
    for (std::size_t v : next) {
      if (seen[v]) continue;
      seen[v] = true;
      out.edges.push_back({cols[u].name, cols[v].name});
      frontier.push(v);
    }
  }
  return out;
}

Dataset forward_sample(const Network& net, std::size_t n, std::mt19937_64& rng) {
  Dataset data(net.variables());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> states(net.size());
  std::vector<std::size_t> pstates;
  for (std::size_t i = 0; i < n; ++i) {
    for (VarId v : net.topological_order()) {
      pstates.clear();
      for (VarId p : net.parents(v)) pstates.push_back(states[p]);
      const auto row = net.row(v, net.row_index(v, pstates));
      const double u = unit(rng);
      double acc = 0.0;
      std::size_t s = 0;
      for (; s + 1 < row.size(); ++s) {
        acc += row[s];
        if (u < acc) break;
      }
      states[v] = s;
    }
    data.add_row(states);
  }
  return data;
}

Dataset joint_table(const Network& net) {
  std::vector<std::size_t> cards;
  for (VarId v = 0; v < net.size(); ++v) cards.push_back(net.cardinality(v));
  const std::size_t total = scope_size(cards);
  if (net.size() > 24 || total > (std::size_t{1} << 24))
    throw Error(Errc::TooLargeForEnumeration, "network too large for a joint table");
  Dataset data(net.variables());
  std::vector<std::size_t> states(net.size(), 0);
  for (std::size_t i = 0; i < total; ++i) {
    data.add_row(states, joint_probability(net, states));
    for (std::size_t k = states.size(); k-- > 0;) {
      if (++states[k] < cards[k]) break;
      states[k] = 0;
    }
  }
  return data;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw Error(Errc::MissingColumn, "CSV has no column '" + std::string(name) + "'", {{"column", name}});
}

namespace {

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_record(line);
    for (auto& f : fields) f = trim(std::move(f));
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw Error(Errc::SchemaError, "CSV input has no header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'", {{"path", path.string()}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

double parse_cell(const std::string& text, std::size_t row, std::string_view column) {
  const json where = {{"row", row}, {"column", column}, {"cell", text}};
  if (text.empty())
    throw Error(Errc::MissingCell, "row " + std::to_string(row) + " has no value in column '" + std::string(column) + "'",
                where);
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value) || value < 0.0)
    throw Error(Errc::UnparseableCell,
                "row " + std::to_string(row) + ", column '" + std::string(column) + "': '" + text +
                    "' is not a nonnegative number",
                where);
  return value;
}

Dataset dataset_from_csv(const CsvTable& csv, const json& sidecar) {
  if (!sidecar.is_object() || !sidecar.contains("columns") || !sidecar["columns"].is_array())
    throw Error(Errc::SchemaError, "dataset sidecar needs a 'columns' array");
  struct Source {
    std::size_t csv_column;
    std::optional<BinSpec> bins;
  };
  std::vector<Variable> vars;
  std::vector<Source> sources;
  for (const auto& c : sidecar["columns"]) {
    const auto name = c.at("name").get<std::string>();
    const auto source = c.value("source", name);
    Source s{csv.column(source), std::nullopt};
    if (c.contains("bins")) {
      s.bins = bins_from_json(c["bins"]);
      vars.push_back({name, s.bins->states});
    } else {
      vars.push_back({name, c.at("states").get<std::vector<std::string>>()});
    }
    sources.push_back(std::move(s));
  }

  Dataset data(vars);
  std::vector<std::size_t> states(vars.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    for (std::size_t c = 0; c < vars.size(); ++c) {
      const std::size_t col = sources[c].csv_column;
      const std::string& source_name = csv.header[col];
      const std::string cell = col < row.size() ? row[col] : std::string{};
      if (cell.empty())
        throw Error(Errc::MissingCell,
                    "row " + std::to_string(r) + " has no value in column '" + source_name + "'",
                    {{"row", r}, {"column", source_name}});
      if (sources[c].bins) {
        const double x = parse_cell(cell, r, source_name);
        const long b = bin_index(*sources[c].bins, x);
        if (b < 0)
          throw Error(Errc::UnparseableCell, "row " + std::to_string(r) + ", column '" + source_name +
                                                 "': value outside the declared bins",
                      {{"row", r}, {"column", source_name}, {"cell", cell}});
        states[c] = static_cast<std::size_t>(b);
      } else {
        auto s = vars[c].state_index(cell);
        if (!s)
          throw Error(Errc::UnparseableCell,
                      "row " + std::to_string(r) + ", column '" + source_name + "': unknown label '" + cell + "'",
                      {{"row", r}, {"column", source_name}, {"cell", cell}});
        states[c] = *s;
      }
    }
    data.add_row(states);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
  return dataset_from_csv(read_csv(csv), read_json_file(sidecar));
}

}  // namespace oobnlab
