#include "pwscale/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

namespace pwscale {

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

int ConditionSet::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    throw DomainError("unknown condition label: " + label);
  return static_cast<int>(it - labels.begin());
}

TrialTable parse_trials(std::istream& source,
                        const std::optional<std::string>& reference_label) {
  std::string line;
  if (!std::getline(source, line))
    throw FormatError("empty input: missing CSV header");

  // UTF-8 BOM, if any.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);

  const std::vector<std::string> required = {
      "observer", "session", "scene", "condition_1", "condition_2", "selection"};
  std::vector<std::string> header = split_csv_line(line);
  std::vector<int> col(required.size(), -1);
  TrialTable table;
  for (size_t h = 0; h < header.size(); ++h) {
    std::string name = lower(trim(header[h]));
    auto it = std::find(required.begin(), required.end(), name);
    if (it != required.end()) {
      col[it - required.begin()] = static_cast<int>(h);
    } else {
      table.warnings.push_back("ignoring extra column: " + trim(header[h]));
    }
  }
  for (size_t r = 0; r < required.size(); ++r) {
    if (col[r] < 0)
      throw FormatError("missing required column: " + required[r]);
  }

  auto add_condition = [&table](const std::string& label) {
    auto& labels = table.conditions.labels;
    if (std::find(labels.begin(), labels.end(), label) == labels.end())
      labels.push_back(label);
  };

  int row = 1;  // header was row 1
  while (std::getline(source, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    auto get = [&](int c) -> std::string {
      if (c >= static_cast<int>(fields.size()))
        throw FormatError("row " + std::to_string(row) + ": too few fields");
      return trim(fields[c]);
    };
    Trial t;
    t.observer = get(col[0]);
    t.session = get(col[1]);
    t.content = get(col[2]);
    t.condition_a = get(col[3]);
    t.condition_b = get(col[4]);
    std::string sel = get(col[5]);
    if (sel == "1") {
      t.selection = Selection::First;
    } else if (sel == "2") {
      t.selection = Selection::Second;
    } else {
      throw FormatError("row " + std::to_string(row) +
                        ": selection must be 1 or 2, got \"" + sel + "\"");
    }
    if (t.condition_a == t.condition_b)
      throw FormatError("row " + std::to_string(row) +
                        ": a condition compared against itself (" +
                        t.condition_a + ")");
    add_condition(t.condition_a);
    add_condition(t.condition_b);
    table.trials.push_back(std::move(t));
  }

  if (reference_label) {
    auto& labels = table.conditions.labels;
    auto it = std::find(labels.begin(), labels.end(), *reference_label);
    if (it == labels.end())
      throw FormatError("reference condition not found in data: " +
                        *reference_label);
    std::rotate(labels.begin(), it, it + 1);
  }
  return table;
}

TrialTable parse_trials_file(const std::string& path,
                             const std::optional<std::string>& reference_label) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open input file: " + path);
  return parse_trials(in, reference_label);
}

std::string to_csv(const TrialTable& table) {
  std::ostringstream out;
  out << "observer,session,scene,condition_1,condition_2,selection\n";
  for (const Trial& t : table.trials) {
    out << t.observer << ',' << t.session << ',' << t.content << ','
        << t.condition_a << ',' << t.condition_b << ','
        << (t.selection == Selection::First ? '1' : '2') << '\n';
  }
  return out.str();
}

std::map<ObserverKey, CountMatrix> build_observer_matrices(
    const TrialTable& table, bool group_by_content) {
  const int n = table.conditions.size();
  std::map<ObserverKey, CountMatrix> out;
  for (const Trial& t : table.trials) {
    ObserverKey key{t.observer, group_by_content ? t.content : std::string()};
    auto [it, inserted] = out.try_emplace(key, CountMatrix::zero(n));
    int a = table.conditions.index_of(t.condition_a);
    int b = table.conditions.index_of(t.condition_b);
    if (t.selection == Selection::First)
      it->second.counts(a, b) += 1;
    else
      it->second.counts(b, a) += 1;
  }
  return out;
}

CountMatrix pool_matrices(const std::vector<CountMatrix>& matrices, int n) {
  if (matrices.empty()) {
    if (n < 0)
      throw DomainError("pool_matrices: dimension required for empty input");
    return CountMatrix::zero(n);
  }
  int dim = matrices.front().size();
  if (n >= 0 && n != dim)
    throw DomainError("pool_matrices: dimension mismatch");
  CountMatrix pooled = CountMatrix::zero(dim);
  for (const CountMatrix& m : matrices) {
    if (m.size() != dim)
      throw DomainError("pool_matrices: matrices differ in dimension");
    pooled.counts += m.counts;
  }
  return pooled;
}

}  // namespace pwscale
