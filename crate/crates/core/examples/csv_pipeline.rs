//! Loading a CSV with duplicates and zero columns, preparing it for the KL
//! divergence and clustering it.

use std::io::Write;

use lokmeans::data_io::{dedup_merge, filter_domain, load_csv, CsvOptions};
use lokmeans::harness::certify;
use lokmeans::{run, Divergence, EngineConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut file = tempfile_path()?;
    writeln!(file.1, "a,b,c,weight")?;
    for i in 0..30 {
        let x = 1.0 + f64::from(i % 7);
        let y = 2.0 + f64::from(i % 5) * 0.5;
        writeln!(file.1, "{x},{},{y},{}", i % 2, 1 + i % 3)?;
    }
    drop(file.1);

    let raw = load_csv(&file.0, &CsvOptions { skip_header: true, weight_column: Some(3) })?;
    let merged = dedup_merge(&raw)?;
    let div = Divergence::Kl;
    let (data, dropped) = filter_domain(&merged, &div)?;
    println!(
        "{} rows -> {} unique -> {} after dropping dims {:?} (d = {})",
        raw.len(),
        merged.len(),
        data.len(),
        dropped,
        data.dim()
    );

    let cfg = EngineConfig::new(4, div.clone()).with_variant(Variant::MinDLo).with_seed(3);
    let r = run(&data, &cfg)?;
    let certs = certify(&data, &r.final_assignment, &div)?;
    println!("loss {:.6}, c-local {:?}, d-local {:?}", r.final_loss, certs.c_local.kind, certs.d_local.kind);
    std::fs::remove_file(&file.0)?;
    Ok(())
}

fn tempfile_path() -> std::io::Result<(std::path::PathBuf, std::fs::File)> {
    let path = std::env::temp_dir().join(format!("lokmeans-example-{}.csv", std::process::id()));
    let file = std::fs::File::create(&path)?;
    Ok((path, file))
}
