use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        // write_to_file leaves the file untouched when nothing changed,
        // so incremental builds stay incremental.
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/topicmap.h"));
        }
        // Header generation failing must not mask the compile error in
        // src/lib.rs that usually caused it.
        Err(e) => println!("cargo:warning=cbindgen: {e}"),
    }
}
