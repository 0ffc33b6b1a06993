#include "aqe/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "aqe/errors.hpp"
#include "aqe/metrics.hpp"

namespace aqe {

namespace {

double field_value(const MetricRecord& r, const std::string& field,
                   bool* present) {
    *present = true;
    if (field == "eval_return_mean") return r.eval_return_mean;
    if (field == "eval_return_std") return r.eval_return_std;
    if (field == "critic_loss_mean") return r.critic_loss_mean;
    if (field == "actor_objective") return r.actor_objective;
    if (field == "alpha") return r.alpha;
    if (field == "bias_mean") {
        *present = r.bias_mean.has_value();
        return r.bias_mean.value_or(0.0);
    }
    if (field == "bias_std") {
        *present = r.bias_std.has_value();
        return r.bias_std.value_or(0.0);
    }
    if (field == "wallclock_s") {
        *present = r.wallclock_s.has_value();
        return r.wallclock_s.value_or(0.0);
    }
    *present = false;
    return 0.0;
}

struct Series {
    std::string label;
    std::vector<double> steps;
    std::vector<double> values;
};

std::string group_key(const std::filesystem::path& path) {
    std::string stem = path.stem().string(); // strips final extension
    const std::string metrics_suffix = ".metrics";
    if (stem.size() > metrics_suffix.size() &&
        stem.compare(stem.size() - metrics_suffix.size(),
                     metrics_suffix.size(), metrics_suffix) == 0)
        stem.resize(stem.size() - metrics_suffix.size());
    static const std::regex seed_suffix("_(s|seed)[0-9]+$");
    return std::regex_replace(stem, seed_suffix, "");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

} // namespace

std::vector<std::string> plottable_fields() {
    return {"eval_return_mean", "eval_return_std", "critic_loss_mean",
            "actor_objective", "alpha", "bias_mean", "bias_std",
            "wallclock_s"};
}

void plot_metrics(const std::vector<std::filesystem::path>& metrics_paths,
                  const std::string& field,
                  const std::filesystem::path& out_svg) {
    if (metrics_paths.empty())
        throw std::invalid_argument("plot: need at least one metrics file");
    {
        const auto fields = plottable_fields();
        if (std::find(fields.begin(), fields.end(), field) == fields.end()) {
            std::string names;
            for (const auto& f : fields) names += " " + f;
            throw ParseError("plot: unknown field '" + field +
                             "'; available:" + names);
        }
    }

    // Load every run; reject empties and non-monotone step sequences before
    // any output exists.
    std::map<std::string, std::vector<Series>> groups;
    for (const auto& path : metrics_paths) {
        const std::vector<MetricRecord> records = read_metrics(path);
        if (records.empty())
            throw ParseError("plot: empty metrics file: " + path.string());
        Series s;
        s.label = path.stem().string();
        long prev = -1;
        for (const MetricRecord& r : records) {
            if (r.env_steps <= prev)
                throw ParseError("plot: env_steps not strictly increasing in " +
                                 path.string());
            prev = r.env_steps;
            bool present = false;
            const double v = field_value(r, field, &present);
            if (present) {
                s.steps.push_back(static_cast<double>(r.env_steps));
                s.values.push_back(v);
            }
        }
        if (s.values.empty())
            throw ParseError("plot: field '" + field + "' never present in " +
                             path.string());
        groups[group_key(path)].push_back(std::move(s));
    }

    // Collapse multi-seed groups onto the env_steps grid shared by all
    // members; singletons pass through.
    struct Curve {
        std::string label;
        std::vector<double> steps, mean, lo, hi;
        bool band = false;
    };
    std::vector<Curve> curves;
    for (auto& [key, members] : groups) {
        if (members.size() == 1) {
            Curve c;
            c.label = members[0].label;
            c.steps = members[0].steps;
            c.mean = members[0].values;
            curves.push_back(std::move(c));
            continue;
        }
        std::vector<double> common;
        for (double step : members[0].steps) {
            bool everywhere = true;
            for (std::size_t m = 1; m < members.size() && everywhere; ++m)
                everywhere = std::binary_search(members[m].steps.begin(),
                                                members[m].steps.end(), step);
            if (everywhere) common.push_back(step);
        }
        if (common.empty())
            throw ParseError("plot: runs in group '" + key +
                             "' share no env_steps values");
        Curve c;
        c.label = key + " (n=" + std::to_string(members.size()) + ")";
        c.band = true;
        for (double step : common) {
            double sum = 0.0, sum_sq = 0.0;
            for (const Series& s : members) {
                const auto it =
                    std::lower_bound(s.steps.begin(), s.steps.end(), step);
                const double v = s.values[it - s.steps.begin()];
                sum += v;
                sum_sq += v * v;
            }
            const double n = static_cast<double>(members.size());
            const double mean = sum / n;
            const double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
            c.steps.push_back(step);
            c.mean.push_back(mean);
            c.lo.push_back(mean - sd);
            c.hi.push_back(mean + sd);
        }
        curves.push_back(std::move(c));
    }

    // Data ranges.
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const Curve& c : curves) {
        for (double s : c.steps) {
            x_min = std::min(x_min, s);
            x_max = std::max(x_max, s);
        }
        for (double v : c.mean) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
        for (double v : c.lo) y_min = std::min(y_min, v);
        for (double v : c.hi) y_max = std::max(y_max, v);
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double width = 960, height = 600;
    const double ml = 80, mr = 24, mt = 36, mb = 56;
    auto sx = [&](double x) {
        return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
    };
    auto sy = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
        << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes and ticks.
    svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(height - mb)
        << "\" x2=\"" << fmt(width - mr) << "\" y2=\"" << fmt(height - mb)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\""
        << fmt(ml) << "\" y2=\"" << fmt(height - mb)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 5.0;
        const double fy = y_min + (y_max - y_min) * i / 5.0;
        svg << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << fmt(height - mb)
            << "\" x2=\"" << fmt(sx(fx)) << "\" y2=\""
            << fmt(height - mb + 6) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt(sx(fx)) << "\" y=\""
            << fmt(height - mb + 22)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt_tick(fx)
            << "</text>\n";
        svg << "<line x1=\"" << fmt(ml - 6) << "\" y1=\"" << fmt(sy(fy))
            << "\" x2=\"" << fmt(ml) << "\" y2=\"" << fmt(sy(fy))
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt(ml - 10) << "\" y=\"" << fmt(sy(fy) + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt_tick(fy)
            << "</text>\n";
    }
    svg << "<text x=\"" << fmt((ml + width - mr) / 2) << "\" y=\""
        << fmt(height - 12) << "\" font-size=\"14\" text-anchor=\"middle\">"
        << "env_steps</text>\n";
    svg << "<text x=\"20\" y=\"" << fmt((mt + height - mb) / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
        << "20 " << fmt((mt + height - mb) / 2) << ")\">" << field
        << "</text>\n";

    // Curves: shaded band first, then the mean polyline on top.
    int color_index = 0;
    for (const Curve& c : curves) {
        const char* color = kPalette[color_index % 6];
        ++color_index;
        if (c.band) {
            std::ostringstream d;
            d << "M";
            for (std::size_t i = 0; i < c.steps.size(); ++i)
                d << " " << fmt(sx(c.steps[i])) << " " << fmt(sy(c.hi[i]));
            for (std::size_t i = c.steps.size(); i-- > 0;)
                d << " L " << fmt(sx(c.steps[i])) << " " << fmt(sy(c.lo[i]));
            d << " Z";
            svg << "<path d=\"" << d.str() << "\" fill=\"" << color
                << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < c.steps.size(); ++i) {
            if (i) svg << " ";
            svg << fmt(sx(c.steps[i])) << "," << fmt(sy(c.mean[i]));
        }
        svg << "\"/>\n";
    }

    // Legend, top-right.
    double legend_y = mt + 8;
    color_index = 0;
    for (const Curve& c : curves) {
        const char* color = kPalette[color_index % 6];
        ++color_index;
        svg << "<rect x=\"" << fmt(width - mr - 220) << "\" y=\""
            << fmt(legend_y - 9) << "\" width=\"18\" height=\"4\" fill=\""
            << color << "\"/>\n";
        svg << "<text x=\"" << fmt(width - mr - 196) << "\" y=\""
            << fmt(legend_y - 3) << "\" font-size=\"12\">" << c.label
            << "</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";

    std::ofstream out(out_svg, std::ios::trunc);
    if (!out) throw IoError("plot: cannot open output file: " +
                            out_svg.string());
    out << svg.str();
    out.flush();
    if (!out) throw IoError("plot: failed writing " + out_svg.string());
}

} // namespace aqe
