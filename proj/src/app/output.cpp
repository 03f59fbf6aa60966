#include "wsde/app/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace wsde {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

bool is_field(const std::string& model) { return model == "field"; }

// Observables that carry a stderr column in the CSV schema.
bool has_stderr_column(const std::string& name) { return name == "energy" || name == "norm"; }

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("record has no observable '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

// Writes one CSV row given per-observable values plus bookkeeping columns.
void write_row(std::ostream& out, const std::string& model, double t,
               const std::vector<std::string>& names, const std::vector<WeightedValue>& values,
               double ess, double breed_events, double removed_weight) {
  auto value = [&](const std::string& name) { return values[index_of(names, name)]; };
  out << num(t);
  for (const char* name : {"energy", "x_mean", "p_mean", "var_x", "var_p"}) {
    const WeightedValue v = value(name);
    out << ',' << num(v.value);
    if (has_stderr_column(name)) out << ',' << num(v.std_err);
  }
  out << ',' << num(ess) << ',' << num(breed_events) << ',' << num(removed_weight);
  if (is_field(model)) {
    const WeightedValue n = value("norm");
    out << ',' << num(n.value) << ',' << num(n.std_err) << ',' << num(value("im_X").value);
  }
  out << '\n';
}

void write_header(std::ostream& out, const std::string& model) {
  const auto cols = csv_columns(model);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

}  // namespace

std::vector<std::string> csv_columns(const std::string& model) {
  std::vector<std::string> cols{"t",     "energy", "energy_stderr", "x_mean",       "p_mean",
                                "var_x", "var_p",  "ess",           "breed_events", "removed_weight"};
  if (is_field(model)) {
    cols.push_back("norm");
    cols.push_back("norm_stderr");
    cols.push_back("im_X");
  }
  return cols;
}

void write_echo(std::ostream& out, const ConfigEcho& echo, const std::string& prefix) {
  for (const auto& [k, v] : echo) out << prefix << k << " = " << v << '\n';
}

void write_record_csv(std::ostream& out, const ExperimentRecord& record, const ConfigEcho& echo) {
  write_echo(out, echo);
  out << "# source = " << record.model << '\n';
  out << "# realization = " << record.realization << '\n';
  out << "# status = " << (record.failed ? "failed: " + record.diagnostic : "ok") << '\n';
  out << "# divergences = " << record.divergences << '\n';
  write_header(out, record.model);
  for (const SampleRow& row : record.rows) {
    write_row(out, record.model, row.t, record.observable_names, row.values, row.ess,
              static_cast<double>(row.breed_events), row.removed_weight);
  }
}

void write_record_csv(const std::filesystem::path& path, const ExperimentRecord& record,
                      const ConfigEcho& echo) {
  auto out = open_output(path);
  write_record_csv(out, record, echo);
}

std::vector<WeightedValue> MeanCurve::series(const std::string& name) const {
  const std::size_t k = index_of(observable_names, name);
  std::vector<WeightedValue> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[k]);
  return out;
}

MeanCurve realization_mean(const std::vector<const ExperimentRecord*>& records) {
  if (records.empty()) throw std::invalid_argument("no records to average");
  const ExperimentRecord& first = *records.front();
  MeanCurve c;
  c.model = first.model;
  c.observable_names = first.observable_names;
  c.realizations = records.size();
  const std::size_t rows = first.rows.size();
  for (const ExperimentRecord* r : records) {
    if (r->rows.size() != rows) throw std::invalid_argument("records have different sample counts");
  }
  std::vector<double> buf(records.size());
  auto average = [&](auto get) {
    for (std::size_t j = 0; j < records.size(); ++j) buf[j] = get(*records[j]);
    return mean_and_stderr(buf);
  };
  for (std::size_t i = 0; i < rows; ++i) {
    c.t.push_back(first.rows[i].t);
    std::vector<WeightedValue> vals;
    for (std::size_t k = 0; k < c.observable_names.size(); ++k) {
      vals.push_back(average([&](const ExperimentRecord& r) { return r.rows[i].values[k].value; }));
    }
    c.values.push_back(std::move(vals));
    c.ess.push_back(average([&](const ExperimentRecord& r) { return r.rows[i].ess; }).value);
    c.breed_events.push_back(average([&](const ExperimentRecord& r) {
                               return static_cast<double>(r.rows[i].breed_events);
                             }).value);
    c.removed_weight.push_back(
        average([&](const ExperimentRecord& r) { return r.rows[i].removed_weight; }).value);
  }
  return c;
}

void write_mean_csv(const std::filesystem::path& path, const MeanCurve& curve,
                    const ConfigEcho& echo) {
  auto out = open_output(path);
  write_echo(out, echo);
  out << "# source = " << curve.model << " (mean over " << curve.realizations
      << " realizations)\n";
  write_header(out, curve.model);
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    write_row(out, curve.model, curve.t[i], curve.observable_names, curve.values[i], curve.ess[i],
              curve.breed_events[i], curve.removed_weight[i]);
  }
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, const ConfigEcho& echo) {
  constexpr double width = 720, height = 450;
  constexpr double left = 70, right = 20, top = 40, bottom = 55;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double b = s.band.empty() ? 0.0 : s.band[i];
      if (!std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i] - b);
      y_hi = std::max(y_hi, s.y[i] + b);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_hi <= y_lo) y_hi = y_lo + 1;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right); };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * (height - top - bottom); };

  auto out = open_output(path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n";
  write_echo(out, echo, "  ");
  out << "-->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  // Axes and ticks.
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
      << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 5.0;
    const double yv = y_lo + (y_hi - y_lo) * i / 5.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\">" << short_num(xv) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << short_num(yv) << "</text>\n";
    out << "<line x1=\"" << left << "\" x2=\"" << width - right << "\" y1=\"" << py(yv)
        << "\" y2=\"" << py(yv) << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << x_label << "</text>\n";
  out << "<text transform=\"translate(18," << height / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";

  double legend_y = top + 16;
  for (const PlotSeries& s : series) {
    if (!s.band.empty()) {
      out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << ',' << py(s.y[i] + s.band[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) out << px(s.x[i]) << ',' << py(s.y[i] - s.band[i]) << ' ';
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<line x1=\"" << width - right - 170 << "\" x2=\"" << width - right - 145 << "\" y1=\""
        << legend_y << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << width - right - 140 << "\" y=\"" << legend_y + 4 << "\">" << s.label
        << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

}  // namespace wsde
