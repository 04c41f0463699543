#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pdml/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distance metric learning with learnable proxies"};
  app.require_subcommand(1);

  int exit_code = 0;
  pdml::tools::register_gen_data(app);
  pdml::tools::register_train(app);
  pdml::tools::register_eval(app);
  pdml::tools::register_verify_bounds(app, exit_code);
  pdml::tools::register_sweep_proxy_ratio(app);
  pdml::tools::register_compare(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int cli_code = app.exit(e);  // prints help or the parse error
    return cli_code == 0 ? 0 : 2;
  } catch (const pdml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pdml::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const pdml::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const pdml::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
