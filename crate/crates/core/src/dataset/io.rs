use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{DatasetError, DrugRecord, EventCatalog, InteractionPair, FEATURE_DIM};
use crate::chem::smiles_to_selfies;

pub const DRUG_FIXED_COLUMNS: [&str; 4] = ["id", "smiles", "description", "atc_code"];

fn csv_err(row: u64, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::MalformedRow {
        row,
        msg: e.to_string(),
    }
}

fn drug_header() -> Vec<String> {
    DRUG_FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..FEATURE_DIM).map(|i| format!("f{i}")))
        .collect()
}

/// Reads the drugs CSV. Feature cells are either all empty or all 50
/// present; SMILES outside the supported subset leave `selfies` empty.
pub fn ingest_drugs<R: Read>(source: R) -> Result<Vec<DrugRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected = drug_header();
    let fixed_ok = header.len() >= 4 && header[..4] == expected[..4];
    let feats_ok = header.len() == 4 || header[..] == expected[..];
    if !fixed_ok || !feats_ok {
        return Err(csv_err(1, "header must be id,smiles,description,atc_code,f0..f49"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e))?;
        let row = rec.position().map_or(0, |p| p.line());
        if rec.len() < 4 {
            return Err(csv_err(row, format!("{} fields, expected at least 4", rec.len())));
        }
        if rec.len() > 4 + FEATURE_DIM {
            return Err(DatasetError::FeatureDimensionMismatch {
                row,
                found: rec.len() - 4,
            });
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(csv_err(row, "empty drug id"));
        }
        let cells: Vec<&str> = rec.iter().skip(4).map(str::trim).filter(|c| !c.is_empty()).collect();
        let features = match cells.len() {
            0 => None,
            FEATURE_DIM => {
                let mut v = Vec::with_capacity(FEATURE_DIM);
                for c in cells {
                    let x: f64 = c.parse().map_err(|_| csv_err(row, format!("bad feature value {c:?}")))?;
                    if !x.is_finite() {
                        return Err(csv_err(row, format!("non-finite feature value {c:?}")));
                    }
                    v.push(x);
                }
                Some(v)
            }
            found => return Err(DatasetError::FeatureDimensionMismatch { row, found }),
        };
        let smiles = rec[1].trim().to_string();
        let selfies = if smiles.is_empty() {
            None
        } else {
            smiles_to_selfies(&smiles).ok().map(|s| s.to_string())
        };
        let atc = rec[3].trim();
        out.push(DrugRecord {
            id,
            smiles,
            selfies,
            description: rec[2].to_string(),
            features,
            atc_code: (!atc.is_empty()).then(|| atc.to_string()),
            drug_type: None,
        });
    }
    Ok(out)
}

/// Reads the pairs CSV (`drug_a,drug_b,event`) as unresolved triples.
pub fn ingest_pairs<R: Read>(source: R) -> Result<Vec<(String, String, usize)>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(source);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != ["drug_a", "drug_b", "event"] {
        return Err(csv_err(1, "header must be drug_a,drug_b,event"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e))?;
        let row = rec.position().map_or(0, |p| p.line());
        let event: usize = rec[2]
            .trim()
            .parse()
            .map_err(|_| csv_err(row, format!("bad event index {:?}", &rec[2])))?;
        out.push((rec[0].trim().to_string(), rec[1].trim().to_string(), event));
    }
    Ok(out)
}

pub fn read_catalog<R: Read>(source: R) -> Result<EventCatalog, DatasetError> {
    let map: BTreeMap<usize, String> = serde_json::from_reader(source).map_err(|e| DatasetError::Json(e.to_string()))?;
    Ok(EventCatalog::new(map))
}

pub fn write_catalog<W: Write>(catalog: &EventCatalog, sink: W) -> Result<(), DatasetError> {
    serde_json::to_writer_pretty(sink, catalog).map_err(|e| DatasetError::Json(e.to_string()))
}

pub fn write_drugs<W: Write>(drugs: &[DrugRecord], sink: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(drug_header()).map_err(|e| DatasetError::Io(e.to_string()))?;
    for d in drugs {
        let mut row = vec![
            d.id.clone(),
            d.smiles.clone(),
            d.description.clone(),
            d.atc_code.clone().unwrap_or_default(),
        ];
        match &d.features {
            Some(f) => row.extend(f.iter().map(|x| format!("{x}"))),
            None => row.extend(std::iter::repeat_n(String::new(), FEATURE_DIM)),
        }
        w.write_record(&row).map_err(|e| DatasetError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pairs<W: Write>(drugs: &[DrugRecord], pairs: &[InteractionPair], sink: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["drug_a", "drug_b", "event"])
        .map_err(|e| DatasetError::Io(e.to_string()))?;
    for p in pairs {
        w.write_record([&drugs[p.drug_a].id, &drugs[p.drug_b].id, &p.event.to_string()])
            .map_err(|e| DatasetError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
