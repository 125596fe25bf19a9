#include <phasessl/hash.hpp>

#include <openssl/evp.h>

#include <stdexcept>

namespace phasessl {

namespace {
std::string digest(const void* data, std::size_t n)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data, n, md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}
}  // namespace

std::string sha256_hex(std::string_view data)
{
    return digest(data.data(), data.size());
}

std::string sha256_hex(const std::vector<std::uint8_t>& data)
{
    return digest(data.data(), data.size());
}

}  // namespace phasessl
