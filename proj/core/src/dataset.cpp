#include "mvsgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"

namespace mvsgnn {

Index GraphDataset::num_classes() const {
    if (label_mode == LabelMode::multi) return labels_multi.cols;
    Index c = 0;
    for (Index y : labels_single) c = std::max(c, y + 1);
    return c;
}

std::vector<Index> GraphDataset::ids_in_split(Split s) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == s) out.push_back(static_cast<Index>(i));
    }
    return out;
}

void GraphDataset::validate() const {
    const Index n = num_nodes();
    if (adjacency.n_cols != n) throw ShapeMismatchError("adjacency not square");
    if (features.rows != n) throw InconsistentNodeCountError("feature rows != node count");
    if (static_cast<Index>(splits.size()) != n) {
        throw InconsistentNodeCountError("split length != node count");
    }
    adjacency.validate();
    for (Index i = 0; i < n; ++i) {
        for (Index k = adjacency.row_ptr[static_cast<std::size_t>(i)];
             k < adjacency.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const Index j = adjacency.col_idx[static_cast<std::size_t>(k)];
            if (j == i) throw DuplicateEntryError("adjacency diagonal must be empty");
            if (adjacency.at(j, i) == 0.0) {
                throw ShapeMismatchError("adjacency not symmetric");
            }
        }
    }
    if (label_mode == LabelMode::single) {
        if (static_cast<Index>(labels_single.size()) != n) {
            throw InconsistentNodeCountError("label length != node count");
        }
    } else {
        if (labels_multi.rows != n) throw InconsistentNodeCountError("label rows != node count");
    }
    for (double v : features.data) {
        if (!std::isfinite(v)) throw ShapeMismatchError("feature not finite");
    }
}

GraphDataset synth_sbm(Index blocks, Index nodes_per_block, double p_in, double p_out,
                       Index feature_dim, LabelMode label_mode, std::uint64_t seed,
                       double noise_sigma) {
    if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
        throw InvalidProbabilityError("need 0 <= p_out <= p_in <= 1");
    }
    const Index n = blocks * nodes_per_block;
    Rng rng(seed);

    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
        const Index bi = i / nodes_per_block;
        for (Index j = i + 1; j < n; ++j) {
            const Index bj = j / nodes_per_block;
            const double p = (bi == bj) ? p_in : p_out;
            if (rng.bernoulli(p)) {
                edges.push_back({i, j, 1.0});
                edges.push_back({j, i, 1.0});
            }
        }
    }

    GraphDataset ds;
    ds.adjacency = build_csr(edges, n, n);

    // Block means drawn once, then per-node Gaussian noise.
    DenseMatrix means(blocks, feature_dim);
    for (auto& v : means.data) v = rng.normal() * 2.0;
    ds.features = DenseMatrix(n, feature_dim);
    for (Index i = 0; i < n; ++i) {
        const Index b = i / nodes_per_block;
        for (Index f = 0; f < feature_dim; ++f) {
            ds.features(i, f) = means(b, f) + noise_sigma * rng.normal();
        }
    }

    ds.label_mode = label_mode;
    if (label_mode == LabelMode::single) {
        ds.labels_single.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) ds.labels_single[static_cast<std::size_t>(i)] = i / nodes_per_block;
    } else {
        ds.labels_multi = DenseMatrix(n, blocks);
        for (Index i = 0; i < n; ++i) {
            const Index b = i / nodes_per_block;
            ds.labels_multi(i, b) = 1.0;
            ds.labels_multi(i, (b + 1) % blocks) = 1.0;
        }
    }

    ds.splits.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        ds.splits[static_cast<std::size_t>(i)] =
            u < 0.6 ? Split::train : (u < 0.8 ? Split::val : Split::test);
    }
    return ds;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_fields(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

Index parse_index(const std::string& s, long line_no) {
    std::size_t pos = 0;
    long long v;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ParseError("expected integer, got '" + s + "'", line_no);
    }
    if (pos != s.size()) throw ParseError("trailing characters after integer '" + s + "'", line_no);
    return static_cast<Index>(v);
}

double parse_real(const std::string& s, long line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError("expected real, got '" + s + "'", line_no);
    }
    if (pos != s.size()) throw ParseError("trailing characters after real '" + s + "'", line_no);
    return v;
}

} // namespace

GraphDataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                          const std::string& label_path, const std::string& split_path) {
    GraphDataset ds;

    // Features first: their row count fixes N.
    {
        const auto lines = read_lines(feature_path);
        const Index n = static_cast<Index>(lines.size());
        if (n == 0) throw ParseError("empty feature file", 0);
        const Index f0 = static_cast<Index>(split_fields(lines[0], ',').size());
        ds.features = DenseMatrix(n, f0);
        for (Index i = 0; i < n; ++i) {
            const auto fields = split_fields(lines[static_cast<std::size_t>(i)], ',');
            if (static_cast<Index>(fields.size()) != f0) {
                throw ParseError("inconsistent feature column count", i + 1);
            }
            for (Index j = 0; j < f0; ++j) {
                ds.features(i, j) = parse_real(fields[static_cast<std::size_t>(j)], i + 1);
            }
        }
    }
    const Index n = ds.features.rows;

    {
        const auto lines = read_lines(edge_path);
        std::set<std::pair<Index, Index>> pairs;
        for (std::size_t ln = 0; ln < lines.size(); ++ln) {
            const std::string& line = lines[ln];
            if (line.empty() || line[0] == '#') continue;
            const auto fields = split_fields(line, '\t');
            if (fields.size() != 2) {
                throw ParseError("expected 'u<TAB>v' (weighted edges are rejected)",
                                 static_cast<long>(ln + 1));
            }
            const Index u = parse_index(fields[0], static_cast<long>(ln + 1));
            const Index v = parse_index(fields[1], static_cast<long>(ln + 1));
            if (u < 0 || v < 0 || u >= n || v >= n) {
                throw InconsistentNodeCountError("edge id exceeds node count");
            }
            if (u == v) continue;  // self loops are dropped from raw adjacency
            pairs.emplace(std::min(u, v), std::max(u, v));
        }
        std::vector<Edge> edges;
        edges.reserve(pairs.size() * 2);
        for (const auto& [u, v] : pairs) {
            edges.push_back({u, v, 1.0});
            edges.push_back({v, u, 1.0});
        }
        ds.adjacency = build_csr(edges, n, n);
    }

    {
        const auto lines = read_lines(label_path);
        if (static_cast<Index>(lines.size()) != n) {
            throw InconsistentNodeCountError("label line count != node count");
        }
        const bool multi = split_fields(lines[0], ',').size() > 1;
        if (multi) {
            ds.label_mode = LabelMode::multi;
            const Index c = static_cast<Index>(split_fields(lines[0], ',').size());
            ds.labels_multi = DenseMatrix(n, c);
            for (Index i = 0; i < n; ++i) {
                const auto fields = split_fields(lines[static_cast<std::size_t>(i)], ',');
                if (static_cast<Index>(fields.size()) != c) {
                    throw ParseError("inconsistent label column count", i + 1);
                }
                for (Index j = 0; j < c; ++j) {
                    const Index v = parse_index(fields[static_cast<std::size_t>(j)], i + 1);
                    if (v != 0 && v != 1) {
                        throw UnknownLabelClassError("multi-label entries must be 0/1");
                    }
                    ds.labels_multi(i, j) = static_cast<double>(v);
                }
            }
        } else {
            ds.label_mode = LabelMode::single;
            ds.labels_single.resize(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) {
                const Index y = parse_index(lines[static_cast<std::size_t>(i)], i + 1);
                if (y < 0) throw UnknownLabelClassError("negative class index");
                ds.labels_single[static_cast<std::size_t>(i)] = y;
            }
        }
    }

    {
        const auto lines = read_lines(split_path);
        if (static_cast<Index>(lines.size()) != n) {
            throw InconsistentNodeCountError("split line count != node count");
        }
        ds.splits.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            const std::string& s = lines[static_cast<std::size_t>(i)];
            if (s.size() != 1) throw ParseError("expected one of {t,v,s,u}", i + 1);
            switch (s[0]) {
                case 't': ds.splits[static_cast<std::size_t>(i)] = Split::train; break;
                case 'v': ds.splits[static_cast<std::size_t>(i)] = Split::val; break;
                case 's': ds.splits[static_cast<std::size_t>(i)] = Split::test; break;
                case 'u': ds.splits[static_cast<std::size_t>(i)] = Split::unused; break;
                default: throw ParseError("expected one of {t,v,s,u}", i + 1);
            }
        }
    }

    ds.validate();
    return ds;
}

void save_dataset(const GraphDataset& ds, const std::string& edge_path,
                  const std::string& feature_path, const std::string& label_path,
                  const std::string& split_path) {
    const Index n = ds.num_nodes();
    {
        std::ofstream out(edge_path);
        out << "# undirected edge list, one u<TAB>v per line\n";
        for (Index i = 0; i < n; ++i) {
            for (Index k = ds.adjacency.row_ptr[static_cast<std::size_t>(i)];
                 k < ds.adjacency.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const Index j = ds.adjacency.col_idx[static_cast<std::size_t>(k)];
                if (i < j) out << i << '\t' << j << '\n';
            }
        }
    }
    {
        std::ofstream out(feature_path);
        char buf[64];
        for (Index i = 0; i < n; ++i) {
            for (Index f = 0; f < ds.features.cols; ++f) {
                std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, f));
                out << (f ? "," : "") << buf;
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(label_path);
        if (ds.label_mode == LabelMode::single) {
            for (Index i = 0; i < n; ++i) out << ds.labels_single[static_cast<std::size_t>(i)] << '\n';
        } else {
            for (Index i = 0; i < n; ++i) {
                for (Index c = 0; c < ds.labels_multi.cols; ++c) {
                    out << (c ? "," : "") << (ds.labels_multi(i, c) != 0.0 ? 1 : 0);
                }
                out << '\n';
            }
        }
    }
    {
        std::ofstream out(split_path);
        for (Index i = 0; i < n; ++i) {
            switch (ds.splits[static_cast<std::size_t>(i)]) {
                case Split::train: out << "t\n"; break;
                case Split::val: out << "v\n"; break;
                case Split::test: out << "s\n"; break;
                case Split::unused: out << "u\n"; break;
            }
        }
    }
}

} // namespace mvsgnn
