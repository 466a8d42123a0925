#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwscale/types.hpp"

namespace pwscale {

enum class Selection { First, Second };

struct Trial {
  std::string observer;
  std::string session;
  std::string content;
  std::string condition_a;
  std::string condition_b;
  Selection selection = Selection::First;
};

/// Ordered condition labels; index 0 is the reference fixed at quality 0.
struct ConditionSet {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  int index_of(const std::string& label) const;
};

struct TrialTable {
  std::vector<Trial> trials;
  ConditionSet conditions;
  std::vector<std::string> warnings;  // e.g. ignored extra columns
};

/// Key identifying one comparison matrix: an observer, optionally
/// restricted to one piece of content.
struct ObserverKey {
  std::string observer;
  std::string content;  // empty when pooled across content

  auto operator<=>(const ObserverKey&) const = default;
};

/// Parse trial rows from a CSV stream. The header must contain columns
/// observer, session, scene, condition_1, condition_2, selection
/// (case-insensitive, whitespace trimmed); selection is "1" or "2".
/// Condition order is first appearance unless reference_label is given,
/// in which case that label is moved to index 0.
TrialTable parse_trials(std::istream& source,
                        const std::optional<std::string>& reference_label = {});

/// Convenience overload reading from a file path.
TrialTable parse_trials_file(const std::string& path,
                             const std::optional<std::string>& reference_label = {});

/// Serialize a TrialTable back to CSV (header included).
std::string to_csv(const TrialTable& table);

/// One count matrix per observer (and per content when group_by_content).
std::map<ObserverKey, CountMatrix> build_observer_matrices(
    const TrialTable& table, bool group_by_content = false);

/// Element-wise sum of count matrices. n gives the dimension for an
/// empty collection; otherwise it is inferred from the first matrix.
CountMatrix pool_matrices(const std::vector<CountMatrix>& matrices, int n = -1);

}  // namespace pwscale
