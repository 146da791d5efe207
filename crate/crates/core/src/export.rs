//! GraphML output for Gephi and similar tools.

use std::io::Write;

use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

/// Optional per-node attributes written alongside `label` and `degree`.
#[derive(Debug, Default, Clone, Copy)]
pub struct NodeAttributes<'a> {
    pub communities: Option<&'a Partition>,
    pub pagerank: Option<&'a [f64]>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_graphml<W: Write>(g: &UndirectedGraph, attrs: NodeAttributes<'_>, mut w: W) -> Result<()> {
    let n = g.node_count();
    if attrs.communities.is_some_and(|p| p.len() != n) {
        return Err(Error::invalid("community assignment does not match graph"));
    }
    if attrs.pagerank.is_some_and(|p| p.len() != n) {
        return Err(Error::invalid("pagerank vector does not match graph"));
    }
    let communities = attrs.communities.map(Partition::by_size);

    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        w,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
    )?;
    writeln!(w, r#"  <key id="label" for="node" attr.name="label" attr.type="string"/>"#)?;
    writeln!(w, r#"  <key id="degree" for="node" attr.name="degree" attr.type="int"/>"#)?;
    if communities.is_some() {
        writeln!(w, r#"  <key id="community_id" for="node" attr.name="community_id" attr.type="int"/>"#)?;
    }
    if attrs.pagerank.is_some() {
        writeln!(w, r#"  <key id="pagerank" for="node" attr.name="pagerank" attr.type="double"/>"#)?;
    }
    writeln!(w, r#"  <graph id="G" edgedefault="undirected">"#)?;
    for v in 0..n {
        writeln!(w, r#"    <node id="n{}">"#, g.ids()[v])?;
        writeln!(w, r#"      <data key="label">{}</data>"#, escape(g.label(v)))?;
        writeln!(w, r#"      <data key="degree">{}</data>"#, g.degree(v))?;
        if let Some(p) = &communities {
            writeln!(w, r#"      <data key="community_id">{}</data>"#, p.community(v))?;
        }
        if let Some(pr) = attrs.pagerank {
            writeln!(w, r#"      <data key="pagerank">{:e}</data>"#, pr[v])?;
        }
        writeln!(w, "    </node>")?;
    }
    for (i, (u, v)) in g.edges().enumerate() {
        writeln!(
            w,
            r#"    <edge id="e{i}" source="n{}" target="n{}"/>"#,
            g.ids()[u],
            g.ids()[v]
        )?;
    }
    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")?;
    w.flush()?;
    Ok(())
}
