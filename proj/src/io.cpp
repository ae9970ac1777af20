#include "vortexlab/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

namespace vlab {

namespace {

template <class T>
void put(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw Error("read: truncated stream");
    return v;
}

void write_header(std::ostream& os, const char* magic, const Grid& g, std::uint64_t count)
{
    os.write(magic, 4);
    put<std::int32_t>(os, g.d);
    put<std::int32_t>(os, g.n_perp);
    put<std::int32_t>(os, g.n3);
    put<double>(os, g.L);
    put<std::uint64_t>(os, count);
}

Grid read_header(std::istream& is, const char* magic, std::uint64_t& count)
{
    char m[4];
    is.read(m, 4);
    if (!is || std::memcmp(m, magic, 4) != 0)
        throw Error(std::string("read: bad magic, expected ") + std::string(magic, 4));
    Grid g;
    g.d = get<std::int32_t>(is);
    g.n_perp = get<std::int32_t>(is);
    g.n3 = get<std::int32_t>(is);
    g.L = get<double>(is);
    count = get<std::uint64_t>(is);
    g.validate();
    return g;
}

} // namespace

void write_field(std::ostream& os, const Field& f)
{
    write_header(os, "VLF1", f.grid, f.values.size());
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

Field read_field(std::istream& is)
{
    std::uint64_t count = 0;
    Grid g = read_header(is, "VLF1", count);
    if (count != g.size())
        throw Error("read_field: value count does not match grid");
    Field f(g);
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is)
        throw Error("read_field: truncated values");
    return f;
}

void write_profile(std::ostream& os, const Profile& p)
{
    write_header(os, "VLP1", p.grid, p.values.size());
    os.write(reinterpret_cast<const char*>(p.values.data()),
             static_cast<std::streamsize>(p.values.size() * sizeof(double)));
}

Profile read_profile(std::istream& is)
{
    std::uint64_t count = 0;
    Grid g = read_header(is, "VLP1", count);
    if (count != static_cast<std::uint64_t>(g.n_nodes()))
        throw Error("read_profile: value count does not match grid");
    Profile p(g);
    is.read(reinterpret_cast<char*>(p.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is)
        throw Error("read_profile: truncated values");
    return p;
}

void save_field(const std::string& path, const Field& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot open " + path);
    write_field(os, f);
}

Field load_field(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open " + path);
    return read_field(is);
}

void write_profiles_csv(const std::string& path, const std::vector<std::string>& names,
                        const std::vector<const Profile*>& cols)
{
    if (names.size() != cols.size() || cols.empty())
        throw ConfigError("write_profiles_csv: names/columns mismatch");
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open " + path);
    os << "x3";
    for (const auto& n : names)
        os << ',' << n;
    os << '\n' << std::setprecision(17);
    const Grid& g = cols.front()->grid;
    for (int j = 0; j < g.n_nodes(); ++j) {
        os << g.x3(j);
        for (const Profile* p : cols)
            os << ',' << (*p)[j];
        os << '\n';
    }
}

} // namespace vlab
