#include "dsec/model/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::model {

namespace {

void write_number(std::ostream& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

void write_values(std::ostream& out, std::string_view tag, std::span<const double> values) {
    out << tag;
    for (double v : values) {
        out << ' ';
        write_number(out, v);
    }
    out << '\n';
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::istringstream next(std::string_view expected_tag) {
        std::string line;
        if (!std::getline(in_, line)) throw FormatError(fmt::format("checkpoint: expected '{}' but hit end of file", expected_tag));
        ++line_no_;
        return std::istringstream(line);
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

double parse_number(const std::string& token, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw FormatError(fmt::format("checkpoint line {}: '{}' is not a number", line, token));
    }
    return v;
}

std::vector<double> read_values(std::istringstream& ss, std::size_t count, std::size_t line) {
    std::vector<double> out;
    out.reserve(count);
    std::string token;
    while (ss >> token) out.push_back(parse_number(token, line));
    if (out.size() != count) {
        throw FormatError(fmt::format("checkpoint line {}: expected {} values, found {}", line, count, out.size()));
    }
    return out;
}

void expect_tag(std::istringstream& ss, std::string_view tag, std::size_t line) {
    std::string got;
    ss >> got;
    if (got != tag) throw FormatError(fmt::format("checkpoint line {}: expected '{}', found '{}'", line, tag, got));
}

} // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
    out << "dsec-checkpoint " << kCheckpointVersion << '\n';
    for (const auto& [key, value] : checkpoint.attributes) {
        if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
            throw FormatError(fmt::format("checkpoint: attribute '{}' cannot be serialized", key));
        }
        out << "attr " << key << ' ' << value << '\n';
    }
    for (const auto& [name, values] : checkpoint.vectors) {
        write_values(out, fmt::format("vector {} {}", name, values.size()), values);
    }
    for (const auto& [name, layers] : checkpoint.stacks) {
        out << "stack " << name << ' ' << layers.size() << '\n';
        for (const auto& layer : layers) {
            out << "layer " << layer.in_dim() << ' ' << layer.out_dim() << ' ' << to_string(layer.activation) << ' '
                << (layer.trainable ? 1 : 0) << '\n';
            write_values(out, "weights", layer.weights.values());
            write_values(out, "bias", layer.bias);
        }
    }
    if (checkpoint.cluster_head) {
        const auto& head = *checkpoint.cluster_head;
        out << "centroids " << head.centroids.rows() << ' ' << head.centroids.cols() << ' ';
        write_number(out, head.alpha);
        out << '\n';
        write_values(out, "values", head.centroids.values());
    }
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
    LineReader reader(in);
    Checkpoint cp;
    {
        auto ss = reader.next("dsec-checkpoint");
        std::string magic;
        int version = 0;
        ss >> magic >> version;
        if (magic != "dsec-checkpoint") throw FormatError("checkpoint: missing 'dsec-checkpoint' header");
        if (version != kCheckpointVersion) {
            throw FormatError(fmt::format("checkpoint: unsupported version {} (expected {})", version, kCheckpointVersion));
        }
    }
    while (true) {
        auto ss = reader.next("end");
        std::string tag;
        ss >> tag;
        const std::size_t line = reader.line();
        if (tag == "end") break;
        if (tag == "attr") {
            std::string key;
            ss >> key;
            std::string value;
            std::getline(ss, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            cp.attributes[key] = value;
        } else if (tag == "vector") {
            std::string name;
            std::size_t n = 0;
            ss >> name >> n;
            cp.vectors[name] = read_values(ss, n, line);
        } else if (tag == "stack") {
            std::string name;
            std::size_t count = 0;
            ss >> name >> count;
            std::vector<DenseLayer> layers;
            for (std::size_t i = 0; i < count; ++i) {
                auto hs = reader.next("layer");
                expect_tag(hs, "layer", reader.line());
                std::size_t in_dim = 0, out_dim = 0;
                std::string act;
                int trainable = 0;
                if (!(hs >> in_dim >> out_dim >> act >> trainable)) {
                    throw FormatError(fmt::format("checkpoint line {}: malformed layer header", reader.line()));
                }
                DenseLayer layer;
                layer.activation = activation_from_string(act);
                layer.trainable = trainable != 0;
                auto ws = reader.next("weights");
                expect_tag(ws, "weights", reader.line());
                layer.weights = Matrix(in_dim, out_dim, read_values(ws, in_dim * out_dim, reader.line()));
                auto bs = reader.next("bias");
                expect_tag(bs, "bias", reader.line());
                layer.bias = read_values(bs, out_dim, reader.line());
                layers.push_back(std::move(layer));
            }
            cp.stacks[name] = std::move(layers);
        } else if (tag == "centroids") {
            std::size_t k = 0, m = 0;
            std::string alpha_token;
            ss >> k >> m >> alpha_token;
            ClusterHead head;
            head.alpha = parse_number(alpha_token, line);
            auto vs = reader.next("values");
            expect_tag(vs, "values", reader.line());
            head.centroids = Matrix(k, m, read_values(vs, k * m, reader.line()));
            cp.cluster_head = std::move(head);
        } else {
            throw FormatError(fmt::format("checkpoint line {}: unknown record '{}'", line, tag));
        }
    }
    return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", path.string()));
    write_checkpoint(out, checkpoint);
    if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open checkpoint '{}'", path.string()));
    return read_checkpoint(in);
}

} // namespace dsec::model
