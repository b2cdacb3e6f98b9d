#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"locus: indoor WiFi positioning toolkit"};
    app.require_subcommand(1);
    locus::cli::register_commands(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        locus::cli::run_selected(app);
    } catch (const CLI::ParseError& e) {
        std::cerr << "locus: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "locus: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
