#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mrisk/enlargement.hpp"
#include "mrisk/model.hpp"

namespace mrisk {

/// "<path>|alive" or "<path>|dead@s": the G_t atom holding outcome w.
template <class Scalar>
std::string atom_id(const Model<Scalar>& model, const EnlargementBundle<Scalar>& b, int t, int w);

struct ReportRow {
  std::string process;
  int t = 0;
  std::string atom;
  std::string exact;  // "p/q" in rational mode, empty in float mode
  double value = 0.0;
};

/// One row per (process, t, atom).  Predictable processes are labelled with
/// the atom at t - 1 that determines them.
template <class Scalar>
class ReportBuilder {
 public:
  ReportBuilder(const Model<Scalar>& model, const EnlargementBundle<Scalar>& bundle,
                std::string command);

  /// Skipped when an emit filter is set and does not list `name`; an empty
  /// filter keeps everything.  InvariantError if x is not constant on atoms.
  void add(const std::string& name, const Process<Scalar>& x);
  void add_scalar(const std::string& name, const Scalar& x);
  void note(const std::string& key, const std::string& value);

  void set_filter(std::vector<std::string> names) { filter_ = std::move(names); }
  bool wanted(const std::string& name) const;

  const std::vector<ReportRow>& rows() const { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& notes() const { return notes_; }

  /// process,t,atom,value,exact with 17 significant digits; `exact` is 1 when
  /// the printed decimal equals the value.
  std::string csv() const;
  /// {"command", "mode", "summary": {...}, "rows": [...]}; values are "p/q"
  /// strings in rational mode.
  std::string json() const;

 private:
  const Model<Scalar>& model_;
  const EnlargementBundle<Scalar>& b_;
  std::string command_;
  std::vector<std::string> filter_;
  std::vector<ReportRow> rows_;
  std::vector<std::pair<std::string, std::string>> notes_;

  ReportRow make_row(const std::string& name, int t, const std::string& atom,
                     const Scalar& x) const;
};

}  // namespace mrisk
