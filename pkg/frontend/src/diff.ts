// Line diff for the history view. Small inputs, so a plain LCS table.

export interface DiffRow {
	type: 'keep' | 'del' | 'ins';
	text: string;
}

export function lineDiff(fromText: string, toText: string): DiffRow[] {
	if (fromText === toText) {
		return fromText.split('\n').map((text) => ({ type: 'keep' as const, text }));
	}
	const a = fromText.split('\n');
	const b = toText.split('\n');
	const n = a.length;
	const m = b.length;
	// lcs[i][j] = LCS length of a[i:], b[j:]
	const lcs: number[][] = Array.from({ length: n + 1 }, () =>
		new Array<number>(m + 1).fill(0)
	);
	for (let i = n - 1; i >= 0; i--) {
		for (let j = m - 1; j >= 0; j--) {
			lcs[i][j] =
				a[i] === b[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
		}
	}
	const rows: DiffRow[] = [];
	let i = 0;
	let j = 0;
	while (i < n && j < m) {
		if (a[i] === b[j]) {
			rows.push({ type: 'keep', text: a[i] });
			i++;
			j++;
		} else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
			rows.push({ type: 'del', text: a[i] });
			i++;
		} else {
			rows.push({ type: 'ins', text: b[j] });
			j++;
		}
	}
	for (; i < n; i++) rows.push({ type: 'del', text: a[i] });
	for (; j < m; j++) rows.push({ type: 'ins', text: b[j] });
	return rows;
}

export function reconstructTo(rows: DiffRow[]): string {
	return rows
		.filter((r) => r.type !== 'del')
		.map((r) => r.text)
		.join('\n');
}

export function reconstructFrom(rows: DiffRow[]): string {
	return rows
		.filter((r) => r.type !== 'ins')
		.map((r) => r.text)
		.join('\n');
}
