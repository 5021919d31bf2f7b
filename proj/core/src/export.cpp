#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "banditlab/harness.hpp"
#include "json.hpp"

namespace banditlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

// every output file carries enough provenance for an exact re-run
void write_csv_preamble(std::ofstream& out, const BatchSummary& s) {
    out << "# name: " << s.name << '\n';
    out << "# master_seed: " << s.master_seed << '\n';
    nlohmann::json cfg = nlohmann::json::parse(s.config_json);
    out << "# config: " << cfg.dump() << '\n';
}

std::string xml_escape(const std::string& in) {
    std::string out;
    out.reserve(in.size());
    for (char c : in) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void export_summary_csv(const BatchSummary& s, const std::string& path) {
    std::ofstream out = open_out(path);
    write_csv_preamble(out, s);
    out << "policy,t,mean_regret,ci_low,ci_high\n";
    for (const PolicySummary& p : s.policies) {
        for (int t = 1; t <= s.T; ++t) {
            const double m = p.mean_regret[t - 1];
            const double h = p.ci_half[t - 1];
            out << p.label << ',' << t << ',' << fmt(m) << ',' << fmt(m - h) << ',' << fmt(m + h)
                << '\n';
        }
    }
}

std::vector<SummaryCsvRow> read_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    // skip the provenance preamble and the column header
    do {
        if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path);
    } while (!line.empty() && line[0] == '#');
    std::vector<SummaryCsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        SummaryCsvRow r;
        std::string cell;
        std::getline(ss, r.policy, ',');
        std::getline(ss, cell, ',');
        r.t = std::stoi(cell);
        std::getline(ss, cell, ',');
        r.mean_regret = std::stod(cell);
        std::getline(ss, cell, ',');
        r.ci_low = std::stod(cell);
        std::getline(ss, cell, ',');
        r.ci_high = std::stod(cell);
        rows.push_back(std::move(r));
    }
    return rows;
}

void export_runs_csv(const BatchSummary& s, const std::string& path) {
    std::ofstream out = open_out(path);
    write_csv_preamble(out, s);
    out << "policy,run,final_regret,half_time_regret,switch_time\n";
    for (const PolicySummary& p : s.policies) {
        for (size_t r = 0; r < p.final_regret.size(); ++r) {
            out << p.label << ',' << r << ',' << fmt(p.final_regret[r]) << ','
                << fmt(p.half_time_regret[r]) << ',' << p.switch_times[r] << '\n';
        }
    }
}

void export_summary_json(const BatchSummary& s, const std::string& path) {
    nlohmann::json j;
    j["name"] = s.name;
    j["K"] = s.K;
    j["d"] = s.d;
    j["T"] = s.T;
    j["n_runs"] = s.n_runs;
    j["master_seed"] = s.master_seed;
    if (s.resolved_lambda0 >= 0.0) j["resolved_lambda0"] = s.resolved_lambda0;
    if (s.audited_lambda0 >= 0.0) j["audited_lambda0"] = s.audited_lambda0;
    if (!s.csv_normalization_json.empty())
        j["csv_normalization"] = nlohmann::json::parse(s.csv_normalization_json);
    j["config"] = nlohmann::json::parse(s.config_json);
    nlohmann::json pols = nlohmann::json::array();
    for (const PolicySummary& p : s.policies) {
        nlohmann::json pj;
        pj["label"] = p.label;
        pj["mean_regret"] = p.mean_regret;
        pj["ci_half"] = p.ci_half;
        pj["switch_count"] = p.switch_count;
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [t, c] : p.switch_histogram) hist[std::to_string(t)] = c;
        pj["switch_histogram"] = hist;
        pj["final_regret"] = p.final_regret;
        pols.push_back(pj);
    }
    j["policies"] = pols;
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Scale {
    double x0, x1, y0, y1;  // data range
    double px0, px1, py0, py1;  // pixel range (y flipped)
    double x(double v) const { return px0 + (v - x0) / (x1 - x0) * (px1 - px0); }
    double y(double v) const { return py0 - (v - y0) / (y1 - y0) * (py0 - py1); }
};

}  // namespace

void export_summary_svg(const BatchSummary& s, const std::string& path) {
    const int W = 960, H = 600;
    const double ml = 70, mr = 180, mt = 40, mb = 55;

    double ymax = 1.0;
    for (const PolicySummary& p : s.policies)
        for (int t = 0; t < s.T; ++t) ymax = std::max(ymax, p.mean_regret[t] + p.ci_half[t]);
    Scale sc{1.0, static_cast<double>(s.T), 0.0, 1.05 * ymax, ml, W - mr, H - mb, mt};

    std::ofstream out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<desc>master_seed " << s.master_seed << "; config "
        << xml_escape(nlohmann::json::parse(s.config_json).dump()) << "</desc>\n";
    out << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << s.name << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << (H - mb) << "\" x2=\"" << (W - mr) << "\" y2=\""
        << (H - mb) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (H - mb)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double tv = 1.0 + (s.T - 1.0) * i / 5.0;
        const double yv = 1.05 * ymax * i / 5.0;
        out << "<text x=\"" << sc.x(tv) << "\" y=\"" << (H - mb + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << static_cast<long>(tv) << "</text>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", yv);
        out << "<text x=\"" << (ml - 8) << "\" y=\"" << (sc.y(yv) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << (H - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + (H - mt - mb) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (mt + (H - mt - mb) / 2)
        << ")\">cumulative regret</text>\n";

    const int stride = std::max(1, s.T / 400);
    for (size_t p = 0; p < s.policies.size(); ++p) {
        const PolicySummary& ps = s.policies[p];
        const char* color = kPalette[p % 10];

        // CI band
        std::ostringstream band;
        for (int t = 1; t <= s.T; t += stride)
            band << sc.x(t) << ',' << sc.y(ps.mean_regret[t - 1] + ps.ci_half[t - 1]) << ' ';
        for (int t = s.T; t >= 1; t -= stride)
            band << sc.x(t) << ',' << sc.y(ps.mean_regret[t - 1] - ps.ci_half[t - 1]) << ' ';
        out << "<polygon points=\"" << band.str() << "\" fill=\"" << color
            << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

        // mean curve
        std::ostringstream pts;
        for (int t = 1; t <= s.T; t += stride) pts << sc.x(t) << ',' << sc.y(ps.mean_regret[t - 1]) << ' ';
        pts << sc.x(s.T) << ',' << sc.y(ps.mean_regret[s.T - 1]);
        out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\"/>\n";

        // legend entry
        const double ly = mt + 18.0 * p;
        out << "<line x1=\"" << (W - mr + 12) << "\" y1=\"" << ly << "\" x2=\"" << (W - mr + 34)
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << (W - mr + 40) << "\" y=\"" << (ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << ps.label << "</text>\n";
    }
    out << "</svg>\n";
}

BatchSummary run_batch_with_outputs(const ExperimentConfig& cfg, int workers) {
    BatchSummary s = run_batch(cfg, workers);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string stem = cfg.output_dir + "/" + cfg.name;
    export_summary_csv(s, stem + "_summary.csv");
    export_summary_json(s, stem + "_summary.json");
    export_summary_svg(s, stem + "_curves.svg");
    export_runs_csv(s, stem + "_runs.csv");
    return s;
}

}  // namespace banditlab
