use std::io::{stderr, stdout};

fn main() {
    let level = match std::env::var("DELAYMARGIN_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Off,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let code = delaymargin::cli::run(std::env::args_os(), &mut stdout().lock(), &mut stderr().lock());
    std::process::exit(code);
}
