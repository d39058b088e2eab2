use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match mirl_cli::run(std::env::args_os()) {
        Ok(text) => {
            print!("{text}");
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string();
            let msg = msg.trim_end();
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
