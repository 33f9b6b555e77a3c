// Writes the built-in color-name table in the asset layout.

#include <occtrack/colornames.hpp>

#include <iostream>

int main(int argc, char **argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_colornames <out.bin>\n";
        return 2;
    }
    try {
        occtrack::ColorNameTable::builtin().save(argv[1]);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
