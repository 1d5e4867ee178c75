"""Print the identity catalog as an HTML table (anchors verbatim, pipes intact)."""

from harmricci.harness import CATALOG


def main() -> None:
    print("<table>")
    print("<tr><th>id</th><th>identity</th><th>anchor</th><th>applies to</th><th>tol</th></tr>")
    for cid, e in CATALOG.items():
        gates = ", ".join(e.gates)
        print(f"<tr><td><code>{cid}</code></td><td>{e.name}</td><td><code>{e.anchor}</code></td>"
              f"<td>{gates}</td><td>{e.tolerance:g}</td></tr>")
    print("</table>")


if __name__ == "__main__":
    main()
