#include "pbf/rng.hpp"

namespace pbf {

std::uint64_t RngStream::mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream RngStream::substream(std::string_view tag) const {
    // FNV-1a over the tag, then combined with the parent seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return RngStream(mix(seed_ ^ h));
}

RngStream RngStream::substream(std::uint64_t index) const {
    return RngStream(mix(seed_ + mix(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace pbf
