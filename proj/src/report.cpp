#include "mrisk/report.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mrisk/error.hpp"

namespace mrisk {

template <class Scalar>
std::string atom_id(const Model<Scalar>& model, const EnlargementBundle<Scalar>& b, int t, int w) {
  const int tau = b.tau.tau[w];
  std::string id = model.tree.path_id(model.node[t][w]);
  return tau > t ? id + "|alive" : id + "|dead@" + std::to_string(tau);
}

template <class Scalar>
ReportBuilder<Scalar>::ReportBuilder(const Model<Scalar>& model,
                                     const EnlargementBundle<Scalar>& bundle, std::string command)
    : model_(model), b_(bundle), command_(std::move(command)) {}

template <class Scalar>
bool ReportBuilder<Scalar>::wanted(const std::string& name) const {
  if (filter_.empty()) return true;
  for (const auto& f : filter_) {
    if (f == name) return true;
    // "xi" selects xi[S], xi[B], ...; "a:" style prefixes are matched on the stem.
    auto bracket = name.find('[');
    auto colon = name.find(':');
    std::string stem = name.substr(colon == std::string::npos ? 0 : colon + 1);
    if (stem == f) return true;
    if (bracket != std::string::npos) {
      std::string base = stem.substr(0, stem.find('['));
      if (base == f) return true;
    }
  }
  return false;
}

template <class Scalar>
ReportRow ReportBuilder<Scalar>::make_row(const std::string& name, int t, const std::string& atom,
                                          const Scalar& x) const {
  ReportRow r;
  r.process = name;
  r.t = t;
  r.atom = atom;
  r.value = ScalarTraits<Scalar>::to_double(x);
  if constexpr (ScalarTraits<Scalar>::exact) r.exact = ScalarTraits<Scalar>::to_string(x);
  return r;
}

template <class Scalar>
void ReportBuilder<Scalar>::add(const std::string& name, const Process<Scalar>& x) {
  if (!wanted(name)) return;
  const bool predictable = x.tag() == Tag::Predictable;
  for (int t = 0; t <= x.horizon(); ++t) {
    const int at = predictable && t > 0 ? t - 1 : t;
    std::map<std::string, int> seen;
    std::vector<std::string> order;
    for (int w = 0; w < x.outcomes(); ++w) {
      std::string id = atom_id(model_, b_, at, w);
      auto [it, fresh] = seen.emplace(id, w);
      if (fresh) {
        order.push_back(id);
      } else if (!is_zero(Scalar(x(t, w) - x(t, it->second)), x(t, w))) {
        throw InvariantError("process " + name + " is not constant on atom " + id + " at t=" +
                             std::to_string(t));
      }
    }
    for (const auto& id : order) rows_.push_back(make_row(name, t, id, x(t, seen[id])));
  }
}

template <class Scalar>
void ReportBuilder<Scalar>::add_scalar(const std::string& name, const Scalar& x) {
  if (!wanted(name)) return;
  rows_.push_back(make_row(name, 0, model_.tree.path_id(0) + "|alive", x));
}

template <class Scalar>
void ReportBuilder<Scalar>::note(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

template <class Scalar>
std::string ReportBuilder<Scalar>::csv() const {
  std::ostringstream out;
  out << "process,t,atom,value,exact\n";
  for (const auto& r : rows_) {
    std::string dec = to_decimal17(r.value);
    bool exact = !r.exact.empty() && parse_rational(dec) == parse_rational(r.exact);
    out << r.process << ',' << r.t << ',' << r.atom << ',' << dec << ',' << (exact ? 1 : 0) << '\n';
  }
  return out.str();
}

template <class Scalar>
std::string ReportBuilder<Scalar>::json() const {
  using json_t = nlohmann::ordered_json;
  json_t doc;
  doc["command"] = command_;
  doc["mode"] = ScalarTraits<Scalar>::exact ? "rational" : "float";
  json_t summary = json_t::object();
  for (const auto& [k, v] : notes_) summary[k] = v;
  doc["summary"] = summary;
  json_t rows = json_t::array();
  for (const auto& r : rows_) {
    json_t row;
    row["process"] = r.process;
    row["t"] = r.t;
    row["atom"] = r.atom;
    if (!r.exact.empty()) row["value"] = r.exact;
    else row["value"] = r.value;
    rows.push_back(row);
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

template std::string atom_id(const Model<Rational>&, const EnlargementBundle<Rational>&, int, int);
template std::string atom_id(const Model<double>&, const EnlargementBundle<double>&, int, int);
template class ReportBuilder<Rational>;
template class ReportBuilder<double>;

}  // namespace mrisk
