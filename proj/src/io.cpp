#include "knng/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "knng/errors.hpp"

namespace knng {

namespace {

std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path, 0);
    in.seekg(0, std::ios::end);
    std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> buf(static_cast<std::size_t>(len));
    if (len > 0) in.read(buf.data(), len);
    if (!in) throw FormatError("short read on " + path, 0);
    return buf;
}

class Reader {
public:
    Reader(const std::vector<char>& buf) : buf_(buf) {}

    bool eof() const { return pos_ >= buf_.size(); }
    std::uint64_t pos() const { return pos_; }
    std::uint64_t remaining() const { return buf_.size() - pos_; }

    std::int32_t i32() {
        if (remaining() < 4) throw FormatError("truncated int32", pos_);
        std::uint32_t u = 0;
        for (int i = 0; i < 4; ++i)
            u |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return std::bit_cast<std::int32_t>(u);
    }

    float f32() { return std::bit_cast<float>(std::bit_cast<std::uint32_t>(i32())); }

private:
    const std::vector<char>& buf_;
    std::uint64_t pos_ = 0;
};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw FormatError("cannot open " + path + " for writing", 0);
    }
    void i32(std::int32_t v) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(v);
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
        out_.write(b, 4);
    }
    void f32(float v) { i32(std::bit_cast<std::int32_t>(v)); }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw FormatError("write failure on " + path, 0);
    }

private:
    std::ofstream out_;
};

Dataset parse_fvecs(const std::vector<char>& buf) {
    Reader r(buf);
    std::vector<float> values;
    std::int64_t d = -1;
    std::uint32_t n = 0;
    while (!r.eof()) {
        std::uint64_t rec_start = r.pos();
        std::int32_t rd = r.i32();
        if (rd < 1) throw FormatError("record dimensionality must be >= 1", rec_start);
        if (d < 0) d = rd;
        if (rd != d)
            throw FormatError("inconsistent dimensionality across records", rec_start);
        if (r.remaining() < 4ull * static_cast<std::uint64_t>(rd))
            throw FormatError("truncated record", rec_start);
        for (std::int32_t i = 0; i < rd; ++i) {
            std::uint64_t at = r.pos();
            float v = r.f32();
            if (!std::isfinite(v)) throw FormatError("non-finite component", at);
            values.push_back(v);
        }
        ++n;
    }
    if (n < 2) throw FormatError("dataset requires at least 2 vectors", r.pos());
    return Dataset::from_values(static_cast<std::uint32_t>(d), std::move(values));
}

Dataset parse_text(const std::vector<char>& buf) {
    std::vector<float> values;
    std::int64_t d = -1;
    std::uint32_t n = 0;
    std::uint64_t line_start = 0;
    std::size_t i = 0;
    while (i <= buf.size()) {
        bool at_end = i == buf.size();
        if (at_end || buf[i] == '\n') {
            std::string line(buf.data() + line_start, i - line_start);
            std::istringstream ss(line);
            std::vector<float> row;
            double v;
            while (ss >> v) row.push_back(static_cast<float>(v));
            if (!ss.eof())
                throw FormatError("unparsable component", line_start);
            if (!row.empty()) {
                for (float c : row)
                    if (!std::isfinite(c)) throw FormatError("non-finite component", line_start);
                if (d < 0) d = static_cast<std::int64_t>(row.size());
                if (static_cast<std::int64_t>(row.size()) != d)
                    throw FormatError("inconsistent dimensionality across lines", line_start);
                values.insert(values.end(), row.begin(), row.end());
                ++n;
            }
            line_start = i + 1;
            if (at_end) break;
        }
        ++i;
    }
    if (d < 1) throw FormatError("empty text dataset", 0);
    if (n < 2) throw FormatError("dataset requires at least 2 vectors", line_start);
    return Dataset::from_values(static_cast<std::uint32_t>(d), std::move(values));
}

}  // namespace

DatasetFormat dataset_format_from_string(const std::string& s) {
    if (s == "fvecs") return DatasetFormat::fvecs;
    if (s == "text") return DatasetFormat::text;
    throw ArgumentError("unknown dataset format: " + s);
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
    std::vector<char> buf = read_file(path);
    return format == DatasetFormat::fvecs ? parse_fvecs(buf) : parse_text(buf);
}

void save_fvecs(const Dataset& data, const std::string& path) {
    Writer w(path);
    for (std::uint32_t u = 0; u < data.size(); ++u) {
        w.i32(static_cast<std::int32_t>(data.dim()));
        for (float v : data.row(u)) w.f32(v);
    }
    w.finish(path);
}

std::vector<std::vector<std::int32_t>> load_ivecs(const std::string& path) {
    std::vector<char> buf = read_file(path);
    Reader r(buf);
    std::vector<std::vector<std::int32_t>> rows;
    std::int64_t d = -1;
    while (!r.eof()) {
        std::uint64_t rec_start = r.pos();
        std::int32_t rd = r.i32();
        if (rd < 1) throw FormatError("record dimensionality must be >= 1", rec_start);
        if (d < 0) d = rd;
        if (rd != d) throw FormatError("inconsistent dimensionality across records", rec_start);
        if (r.remaining() < 4ull * static_cast<std::uint64_t>(rd))
            throw FormatError("truncated record", rec_start);
        std::vector<std::int32_t> row(rd);
        for (std::int32_t i = 0; i < rd; ++i) row[i] = r.i32();
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_graph(const KnnGraph& g, const std::string& path) {
    Writer w(path);
    w.i32(static_cast<std::int32_t>(g.size()));
    w.i32(static_cast<std::int32_t>(g.k()));
    for (std::uint32_t u = 0; u < g.size(); ++u)
        for (const Neighbor& nb : g.row(u)) w.i32(static_cast<std::int32_t>(nb.id));
    w.finish(path);
}

KnnGraph load_graph(const std::string& path, const Dataset& data) {
    std::vector<char> buf = read_file(path);
    Reader r(buf);
    std::int32_t n = r.i32();
    std::int32_t k = r.i32();
    if (n < 2 || k < 1) throw FormatError("bad graph header", 0);
    if (static_cast<std::uint32_t>(n) != data.size())
        throw FormatError("graph size does not match dataset", 0);
    if (static_cast<std::uint32_t>(k) > data.size() - 1)
        throw FormatError("graph k exceeds n-1", 4);
    KnnGraph g(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(k));
    std::vector<Neighbor> row(g.k());
    for (std::int32_t u = 0; u < n; ++u) {
        for (std::uint32_t i = 0; i < g.k(); ++i) {
            std::uint64_t at = r.pos();
            std::int32_t id = r.i32();
            if (id < 0 || id >= n) throw FormatError("neighbor id out of range", at);
            if (id == u) throw FormatError("self loop in graph row", at);
            row[i] = Neighbor{static_cast<std::uint32_t>(id),
                              data.dist2(static_cast<std::uint32_t>(u),
                                         static_cast<std::uint32_t>(id)),
                              false, false};
        }
        std::sort(row.begin(), row.end(), [](const Neighbor& a, const Neighbor& b) {
            return closer(a, b);
        });
        for (std::uint32_t i = 1; i < g.k(); ++i)
            if (row[i].id == row[i - 1].id)
                throw FormatError("duplicate neighbor id in row", r.pos());
        g.set_row(static_cast<std::uint32_t>(u), row);
    }
    if (!r.eof()) throw FormatError("trailing bytes after graph payload", r.pos());
    return g;
}

void save_layered_graph(const LayeredGraphFile& g, const std::string& path) {
    Writer w(path);
    std::int32_t max_layer = 0;
    for (std::int32_t l : g.layers) max_layer = std::max(max_layer, l);
    w.i32(static_cast<std::int32_t>(g.layers.size()));
    w.i32(max_layer);
    w.i32(static_cast<std::int32_t>(g.entry));
    w.i32(g.degree_cap);
    for (std::int32_t l : g.layers) w.i32(l);
    for (std::size_t u = 0; u < g.adjacency.size(); ++u) {
        for (std::int32_t l = 0; l <= g.layers[u]; ++l) {
            const auto& adj = g.adjacency[u][static_cast<std::size_t>(l)];
            w.i32(static_cast<std::int32_t>(adj.size()));
            for (std::uint32_t id : adj) w.i32(static_cast<std::int32_t>(id));
        }
    }
    w.finish(path);
}

LayeredGraphFile load_layered_graph(const std::string& path) {
    std::vector<char> buf = read_file(path);
    Reader r(buf);
    std::int32_t n = r.i32();
    std::int32_t max_layer = r.i32();
    std::int32_t entry = r.i32();
    std::int32_t cap = r.i32();
    if (n < 1 || max_layer < 0 || entry < 0 || entry >= n || cap < 0)
        throw FormatError("bad layered graph header", 0);
    LayeredGraphFile g;
    g.degree_cap = cap;
    g.entry = static_cast<std::uint32_t>(entry);
    g.layers.resize(static_cast<std::size_t>(n));
    for (std::int32_t u = 0; u < n; ++u) {
        std::uint64_t at = r.pos();
        g.layers[static_cast<std::size_t>(u)] = r.i32();
        if (g.layers[static_cast<std::size_t>(u)] < 0 ||
            g.layers[static_cast<std::size_t>(u)] > max_layer)
            throw FormatError("node layer out of range", at);
    }
    g.adjacency.resize(static_cast<std::size_t>(n));
    for (std::int32_t u = 0; u < n; ++u) {
        auto& levels = g.adjacency[static_cast<std::size_t>(u)];
        levels.resize(static_cast<std::size_t>(g.layers[static_cast<std::size_t>(u)]) + 1);
        for (auto& adj : levels) {
            std::uint64_t at = r.pos();
            std::int32_t deg = r.i32();
            if (deg < 0 || deg >= n) throw FormatError("bad adjacency degree", at);
            adj.resize(static_cast<std::size_t>(deg));
            for (std::int32_t i = 0; i < deg; ++i) {
                std::uint64_t id_at = r.pos();
                std::int32_t id = r.i32();
                if (id < 0 || id >= n || id == u)
                    throw FormatError("bad adjacency id", id_at);
                adj[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(id);
            }
        }
    }
    if (!r.eof()) throw FormatError("trailing bytes after layered graph", r.pos());
    return g;
}

}  // namespace knng
