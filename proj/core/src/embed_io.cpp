#include "planloc/embed_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "planloc/error.hpp"

namespace planloc {

namespace {

constexpr char kMagic[4] = {'L', 'L', 'L', 'C'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(std::string("params file: truncated reading ") + what);
    return v;
}

void write_linear(std::ostream& out, const Eigen::MatrixXd& weights,
                  const Eigen::VectorXd& bias) {
    std::vector<float> buf;
    buf.reserve(static_cast<std::size_t>(weights.size() + bias.size()));
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < weights.cols(); ++c) {
            buf.push_back(static_cast<float>(weights(r, c)));
        }
    }
    for (Eigen::Index i = 0; i < bias.size(); ++i) buf.push_back(static_cast<float>(bias[i]));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_linear(std::istream& in, std::uint32_t in_dim, std::uint32_t out_dim,
                 Eigen::MatrixXd& weights, Eigen::VectorXd& bias) {
    const std::size_t count =
        static_cast<std::size_t>(in_dim) * out_dim + static_cast<std::size_t>(out_dim);
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw ParseError("params file: truncated weight data");
    weights.resize(out_dim, in_dim);
    std::size_t k = 0;
    for (std::uint32_t r = 0; r < out_dim; ++r) {
        for (std::uint32_t c = 0; c < in_dim; ++c) weights(r, c) = buf[k++];
    }
    bias.resize(out_dim);
    for (std::uint32_t i = 0; i < out_dim; ++i) bias[i] = buf[k++];
}

}  // namespace

void save_params(const EncoderParams& params, const std::filesystem::path& path) {
    validate(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(params.branch));
    write_u32(out, static_cast<std::uint32_t>(params.weights.cols()));
    write_u32(out, static_cast<std::uint32_t>(params.weights.rows()));
    write_linear(out, params.weights, params.bias);
    if (params.has_decoder()) {
        write_u32(out, static_cast<std::uint32_t>(params.decoder_weights.cols()));
        write_u32(out, static_cast<std::uint32_t>(params.decoder_weights.rows()));
        write_linear(out, params.decoder_weights, params.decoder_bias);
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

EncoderParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    char magic[4] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ParseError("params file '" + path.string() + "': bad magic (expected LLLC)");
    }
    EncoderParams params;
    const std::uint32_t branch = read_u32(in, "branch");
    if (branch > 1) throw ParseError("params file: branch must be 0 (layout) or 1 (query)");
    params.branch = static_cast<Branch>(branch);
    const std::uint32_t in_dim = read_u32(in, "in_dim");
    const std::uint32_t out_dim = read_u32(in, "out_dim");
    if (in_dim != kEncoderInputDim || out_dim != kEmbedDim) {
        throw ParseError("params file: encoder dimensions " + std::to_string(in_dim) + "->" +
                         std::to_string(out_dim) + " unsupported");
    }
    read_linear(in, in_dim, out_dim, params.weights, params.bias);
    if (in.peek() != std::ifstream::traits_type::eof()) {
        const std::uint32_t dec_in = read_u32(in, "decoder in_dim");
        const std::uint32_t dec_out = read_u32(in, "decoder out_dim");
        if (dec_in != kEmbedDim || dec_out != kEncoderInputDim) {
            throw ParseError("params file: decoder dimensions unsupported");
        }
        read_linear(in, dec_in, dec_out, params.decoder_weights, params.decoder_bias);
    }
    try {
        validate(params);
    } catch (const ValidationError& e) {
        throw ParseError("params file '" + path.string() + "': " + e.what());
    }
    return params;
}

}  // namespace planloc
