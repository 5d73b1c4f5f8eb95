#include "ddi/truss_model.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace ddi {

namespace {

enum class Section { None, Nodes, Bars, Supports, Loads, Prescribed, Programs };

Section section_from(const std::string& word) {
    if (word == "NODES") return Section::Nodes;
    if (word == "BARS") return Section::Bars;
    if (word == "SUPPORTS") return Section::Supports;
    if (word == "LOADS") return Section::Loads;
    if (word == "PRESCRIBED") return Section::Prescribed;
    if (word == "PROGRAMS") return Section::Programs;
    return Section::None;
}

int parse_dir(const std::string& s, int line_no) {
    if (s == "0" || s == "x" || s == "X") return 0;
    if (s == "1" || s == "y" || s == "Y") return 1;
    if (s == "2" || s == "z" || s == "Z") return 2;
    throw ContractViolation("line " + std::to_string(line_no) + ": bad direction '" + s + "'");
}

}  // namespace

TrussMesh read_mesh(std::istream& in) {
    TrussMesh mesh;
    std::map<int, int> node_ids;  // file id -> index
    Section section = Section::None;
    std::string line;
    int line_no = 0;
    auto node_index = [&](int id) {
        auto it = node_ids.find(id);
        if (it == node_ids.end()) {
            throw ContractViolation("line " + std::to_string(line_no) + ": unknown node id " + std::to_string(id));
        }
        return it->second;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string first;
        if (!(row >> first)) continue;
        if (const Section s = section_from(first); s != Section::None) {
            section = s;
            continue;
        }
        row.clear();
        row.str(line);
        auto fail = [&]() -> void {
            throw ContractViolation("line " + std::to_string(line_no) + ": malformed row '" + line + "'");
        };
        switch (section) {
            case Section::Nodes: {
                int id;
                double x, y, z;
                if (!(row >> id >> x >> y >> z)) fail();
                if (node_ids.count(id)) fail();
                node_ids[id] = static_cast<int>(mesh.nodes.size());
                mesh.nodes.emplace_back(x, y, z);
                break;
            }
            case Section::Bars: {
                int id, a, b;
                double area;
                if (!(row >> id >> a >> b >> area)) fail();
                mesh.bars.push_back({node_index(a), node_index(b), area});
                break;
            }
            case Section::Supports: {
                int node;
                std::string dir;
                if (!(row >> node >> dir)) fail();
                mesh.supports.push_back({node_index(node), parse_dir(dir, line_no)});
                break;
            }
            case Section::Loads: {
                int node;
                std::string dir;
                double value;
                if (!(row >> node >> dir >> value)) fail();
                mesh.loads.push_back({node_index(node), parse_dir(dir, line_no), value});
                break;
            }
            case Section::Prescribed: {
                int node, program;
                std::string dir;
                if (!(row >> node >> dir >> program)) fail();
                mesh.prescribed.push_back({node_index(node), parse_dir(dir, line_no), program});
                break;
            }
            case Section::Programs: {
                int id;
                if (!(row >> id)) fail();
                std::vector<std::pair<double, double>> pts;
                double t, v;
                while (row >> t >> v) pts.emplace_back(t, v);
                if (pts.empty()) fail();
                mesh.programs[id] = Schedule(std::move(pts));
                break;
            }
            case Section::None:
                throw ContractViolation("line " + std::to_string(line_no) + ": data before any section header");
        }
    }
    mesh.validate();
    return mesh;
}

TrussMesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file " + path);
    return read_mesh(in);
}

void write_mesh(std::ostream& out, const TrussMesh& mesh) {
    const char dirs[3] = {'x', 'y', 'z'};
    out << std::setprecision(17);
    out << "NODES\n";
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        out << i << ' ' << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y() << ' ' << mesh.nodes[i].z() << '\n';
    }
    out << "BARS\n";
    for (std::size_t e = 0; e < mesh.bars.size(); ++e) {
        out << e << ' ' << mesh.bars[e].a << ' ' << mesh.bars[e].b << ' ' << mesh.bars[e].area << '\n';
    }
    out << "SUPPORTS\n";
    for (const auto& s : mesh.supports) out << s.node << ' ' << dirs[s.dir] << '\n';
    out << "LOADS\n";
    for (const auto& l : mesh.loads) out << l.node << ' ' << dirs[l.dir] << ' ' << l.value << '\n';
    if (!mesh.prescribed.empty()) {
        out << "PRESCRIBED\n";
        for (const auto& p : mesh.prescribed) out << p.node << ' ' << dirs[p.dir] << ' ' << p.program << '\n';
    }
    if (!mesh.programs.empty()) {
        out << "PROGRAMS\n";
        for (const auto& [id, sched] : mesh.programs) {
            out << id;
            for (const auto& [t, v] : sched.breakpoints()) out << ' ' << t << ' ' << v;
            out << '\n';
        }
    }
}

}  // namespace ddi
