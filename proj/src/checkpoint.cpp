#include <phasessl/image_io.hpp>
#include <phasessl/net.hpp>

#include <cstring>
#include <stdexcept>

namespace phasessl {

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& p)
{
    std::vector<std::uint8_t> out = {'M', 'F', 'N', '1'};
    const std::string cfg = to_json(p.config).dump();
    io::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.insert(out.end(), cfg.begin(), cfg.end());
    for (const auto& t : p.tensors)
        for (double v : t.values)
            io::put_f64(out, v);
    return out;
}

ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "MFN1", 4) != 0)
        throw std::runtime_error("not an MFN1 checkpoint");
    std::size_t pos = 4;
    const auto len = io::get_u32(bytes, pos);
    if (pos + len > bytes.size())
        throw std::runtime_error("truncated MFN1 checkpoint header");
    const std::string cfg_text(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    NetConfig cfg;
    try {
        cfg = net_config_from_json(nlohmann::json::parse(cfg_text));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("bad MFN1 network config: ") + e.what());
    }
    ModelParams p = zero_params(cfg);
    for (auto& t : p.tensors)
        for (auto& v : t.values)
            v = io::get_f64(bytes, pos);
    if (pos != bytes.size())
        throw std::runtime_error("MFN1 checkpoint has trailing bytes");
    return p;
}

}  // namespace phasessl
