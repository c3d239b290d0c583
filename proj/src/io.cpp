#include "forcelab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace forcelab {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot open " + tmp + " for writing");
        out << contents;
        if (!out) throw RuntimeFailure("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw RuntimeFailure("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(trim(field));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// Numeric CSV rows; a non-numeric first line is a header.
std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        std::vector<double> row;
        bool ok = true;
        for (const auto& f : fields) {
            auto v = to_double(f);
            if (!v) {
                ok = false;
                break;
            }
            row.push_back(*v);
        }
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw InvalidArgument(what + ": non-numeric field on line " + std::to_string(line_no));
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InvalidArgument(what + ": inconsistent column count on line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void expect_columns(const std::vector<std::vector<double>>& rows, std::size_t cols, const std::string& what) {
    if (!rows.empty() && rows.front().size() != cols) {
        throw InvalidArgument(what + ": expected " + std::to_string(cols) + " columns");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_edge_list(const Graph& g) {
    std::string out = std::to_string(g.n()) + " ";
    if (g.model().kind == GraphKind::KRegular) {
        out += "k=" + std::to_string(g.model().k);
    } else {
        out += "p=" + format_double(g.model().p);
    }
    out += " " + std::to_string(g.seed()) + "\n";
    for (const auto& [u, v] : g.edges()) {
        out += std::to_string(u);
        out += ' ';
        out += std::to_string(v);
        out += '\n';
    }
    return out;
}

Graph parse_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("edge list: missing header");
    std::istringstream hs(header);
    long long n = 0;
    std::string param;
    unsigned long long seed = 0;
    if (!(hs >> n >> param >> seed) || n < 1) throw InvalidArgument("edge list: bad header '" + header + "'");
    GraphModel model;
    if (param.rfind("k=", 0) == 0) {
        model.kind = GraphKind::KRegular;
        model.k = std::stoi(param.substr(2));
    } else if (param.rfind("p=", 0) == 0) {
        model.kind = GraphKind::ErdosRenyi;
        auto p = to_double(param.substr(2));
        if (!p) throw InvalidArgument("edge list: bad p in header");
        model.p = *p;
    } else {
        throw InvalidArgument("edge list: header needs k=<k> or p=<p>");
    }
    std::vector<Edge> edges;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        int u = 0, v = 0;
        if (!(ls >> u >> v)) throw InvalidArgument("edge list: bad edge on line " + std::to_string(line_no));
        edges.emplace_back(u, v);
    }
    return Graph(static_cast<int>(n), std::move(edges), model, seed);
}

void write_edge_list(const std::string& path, const Graph& g) { write_file_atomic(path, format_edge_list(g)); }
Graph read_edge_list(const std::string& path) { return parse_edge_list(read_file(path)); }

PointCloud parse_point_cloud(const std::string& text) {
    auto rows = parse_numeric_csv(text, "point cloud");
    if (rows.empty()) throw InvalidArgument("point cloud: no rows");
    PointCloud pc;
    pc.n = rows.size();
    pc.d = rows.front().size();
    pc.values.reserve(pc.n * pc.d);
    for (const auto& r : rows) pc.values.insert(pc.values.end(), r.begin(), r.end());
    return pc;
}

PointCloud read_point_cloud(const std::string& path) { return parse_point_cloud(read_file(path)); }

std::string format_embedding(const Embedding& e) {
    std::string out = "index,x,y\n";
    for (std::size_t i = 0; i < e.n(); ++i) {
        const Vec2 p = e.point(i);
        out += std::to_string(i) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
    }
    return out;
}

Embedding parse_embedding(const std::string& text) {
    auto rows = parse_numeric_csv(text, "embedding");
    expect_columns(rows, 3, "embedding");
    Embedding e(rows.size());
    std::vector<char> seen(rows.size(), 0);
    for (const auto& r : rows) {
        const double idx = r[0];
        if (idx < 0 || idx >= static_cast<double>(rows.size()) || idx != std::floor(idx)) {
            throw InvalidArgument("embedding: index out of range");
        }
        const auto i = static_cast<std::size_t>(idx);
        if (seen[i]) throw InvalidArgument("embedding: duplicate index " + std::to_string(i));
        seen[i] = 1;
        e.set(i, {r[1], r[2]});
    }
    return e;
}

void write_embedding(const std::string& path, const Embedding& e) { write_file_atomic(path, format_embedding(e)); }
Embedding read_embedding(const std::string& path) { return parse_embedding(read_file(path)); }

std::string format_affinities(const AffinityMatrix& p) {
    std::string out = "i,j,p\n";
    for (std::size_t i = 0; i < p.n(); ++i) {
        auto cols = p.row_cols(i);
        auto vals = p.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            out += std::to_string(i) + "," + std::to_string(cols[k]) + "," + format_double(vals[k]) + "\n";
        }
    }
    return out;
}

void write_affinities(const std::string& path, const AffinityMatrix& p) {
    write_file_atomic(path, format_affinities(p));
}

DiscreteMeasure parse_measure(const std::string& text) {
    auto rows = parse_numeric_csv(text, "measure");
    expect_columns(rows, 3, "measure");
    DiscreteMeasure mu;
    for (const auto& r : rows) {
        mu.support.push_back({r[0], r[1]});
        mu.weights.push_back(r[2]);
    }
    mu.validate();
    return mu;
}

RadialMeasure parse_radial_measure(const std::string& text) {
    auto rows = parse_numeric_csv(text, "radial measure");
    expect_columns(rows, 2, "radial measure");
    RadialMeasure nu;
    for (const auto& r : rows) {
        nu.radii.push_back(r[0]);
        nu.weights.push_back(r[1]);
    }
    nu.validate();
    return nu;
}

std::string format_measure(const DiscreteMeasure& mu) {
    std::string out = "x,y,weight\n";
    for (std::size_t i = 0; i < mu.support.size(); ++i) {
        out += format_double(mu.support[i].x) + "," + format_double(mu.support[i].y) + "," +
               format_double(mu.weights[i]) + "\n";
    }
    return out;
}

std::string format_radial_measure(const RadialMeasure& nu) {
    std::string out = "r,weight\n";
    for (std::size_t i = 0; i < nu.radii.size(); ++i) {
        out += format_double(nu.radii[i]) + "," + format_double(nu.weights[i]) + "\n";
    }
    return out;
}

std::string format_features(const Embedding& e, const ForceField& f, const ForcefulColoring& c,
                            const SinkAssignment& sinks, const std::vector<std::optional<double>>& homogeneity) {
    const std::size_t n = e.n();
    if (f.n() != n || c.magnitude.size() != n || sinks.labels.size() != n || homogeneity.size() != n) {
        throw InvalidArgument("features: inputs differ in size");
    }
    std::string out = "index,x,y,ax,ay,rx,ry,magnitude,direction,sink_label,homogeneity\n";
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 y = e.point(i);
        const Vec2 a = f.attract_at(i);
        const Vec2 r = f.repulse_at(i);
        out += std::to_string(i);
        for (double v : {y.x, y.y, a.x, a.y, r.x, r.y, c.magnitude[i]}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        if (c.direction[i]) out += format_double(*c.direction[i]);
        out += ',';
        out += std::to_string(sinks.labels[i]);
        out += ',';
        if (homogeneity[i]) out += format_double(*homogeneity[i]);
        out += '\n';
    }
    return out;
}

std::string render_svg(const Embedding& e, const std::vector<Rgb>& colors, const SvgOptions& opts) {
    const std::size_t n = e.n();
    if (colors.size() != n) throw InvalidArgument("svg: one color per point required");
    if (!opts.arrows.empty() && opts.arrows.size() != n) throw InvalidArgument("svg: one arrow per point required");

    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    if (n > 0) {
        min_x = max_x = e.point(0).x;
        min_y = max_y = e.point(0).y;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = e.point(i);
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1e-300});
    const double inner = opts.size - 2.0 * opts.margin;
    const double scale = inner / span;
    const double cx = 0.5 * (min_x + max_x);
    const double cy = 0.5 * (min_y + max_y);
    // y grows downward in SVG.
    auto px = [&](Vec2 p) -> Vec2 {
        return {opts.size / 2 + (p.x - cx) * scale, opts.size / 2 - (p.y - cy) * scale};
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto hex = [](Rgb c) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
        return std::string(buf);
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(opts.size) + "\" height=\"" + fmt(opts.size) +
           "\" viewBox=\"0 0 " + fmt(opts.size) + " " + fmt(opts.size) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<g id=\"points\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 q = px(e.point(i));
        out += "<circle cx=\"" + fmt(q.x) + "\" cy=\"" + fmt(q.y) + "\" r=\"" + fmt(opts.point_radius) +
               "\" fill=\"" + hex(colors[i]) + "\"/>\n";
    }
    out += "</g>\n";
    if (!opts.arrows.empty()) {
        double longest = 0.0;
        for (const Vec2& a : opts.arrows) longest = std::max(longest, norm(a));
        out += "<g id=\"arrows\" stroke=\"black\" stroke-width=\"0.6\" fill=\"none\">\n";
        if (longest > 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 a = opts.arrows[i];
                const double len = norm(a);
                if (!(len > 0.0)) continue;
                const Vec2 from = px(e.point(i));
                const double L = opts.arrow_length * len / longest;
                const Vec2 dir{a.x / len, -a.y / len};
                const Vec2 to = from + L * dir;
                // Two short barbs at +-150 degrees from the shaft.
                const double head = 0.35 * L;
                const double c = std::cos(2.618), s = std::sin(2.618);
                const Vec2 b1 = to + head * Vec2{dir.x * c - dir.y * s, dir.x * s + dir.y * c};
                const Vec2 b2 = to + head * Vec2{dir.x * c + dir.y * s, -dir.x * s + dir.y * c};
                out += "<path d=\"M" + fmt(from.x) + " " + fmt(from.y) + "L" + fmt(to.x) + " " + fmt(to.y) + "M" +
                       fmt(b1.x) + " " + fmt(b1.y) + "L" + fmt(to.x) + " " + fmt(to.y) + "L" + fmt(b2.x) + " " +
                       fmt(b2.y) + "\"/>\n";
            }
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace forcelab
